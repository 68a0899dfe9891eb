#pragma once

// Declarative experiment configuration: a small TOML-style file format
// ([section] headers, `key = value` lines, scalars/strings/arrays), plus
// command-line overrides (`--set key=value`) and a fully-resolved snapshot
// writer so every run leaves a re-runnable record beside its outputs.
//
// Commands consume keys through the typed getters; a getter with a default
// records the default when the key is absent, so the resolved snapshot lists
// every setting the run actually used. `require_consumed` rejects keys no
// getter asked for, catching typos early.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cail {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigValue {
  enum class Kind { kBool, kInt, kFloat, kString, kList };
  Kind kind = Kind::kString;
  bool b = false;
  std::int64_t i = 0;
  double f = 0.0;
  std::string s;
  std::vector<ConfigValue> items;

  static ConfigValue of_bool(bool v) {
    ConfigValue x;
    x.kind = Kind::kBool;
    x.b = v;
    return x;
  }
  static ConfigValue of_int(std::int64_t v) {
    ConfigValue x;
    x.kind = Kind::kInt;
    x.i = v;
    return x;
  }
  static ConfigValue of_float(double v) {
    ConfigValue x;
    x.kind = Kind::kFloat;
    x.f = v;
    return x;
  }
  static ConfigValue of_string(std::string v) {
    ConfigValue x;
    x.kind = Kind::kString;
    x.s = std::move(v);
    return x;
  }
  static ConfigValue of_list(std::vector<ConfigValue> v) {
    ConfigValue x;
    x.kind = Kind::kList;
    x.items = std::move(v);
    return x;
  }

  const char* kind_name() const {
    switch (kind) {
      case Kind::kBool: return "bool";
      case Kind::kInt: return "integer";
      case Kind::kFloat: return "float";
      case Kind::kString: return "string";
      case Kind::kList: return "array";
    }
    return "unknown";
  }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
                    c == '-' || c == '.';
    if (!ok) return false;
  }
  return k.front() != '.' && k.back() != '.' &&
         k.find("..") == std::string::npos;
}

// Strips a trailing comment, respecting quoted strings.
inline std::string strip_comment(const std::string& line) {
  bool in_quote = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quote) {
      if (c == '\\') {
        ++i;  // skip escaped character
      } else if (c == '"') {
        in_quote = false;
      }
    } else if (c == '"') {
      in_quote = true;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

inline bool looks_like_int(const std::string& t) {
  std::size_t i = (t[0] == '+' || t[0] == '-') ? 1 : 0;
  if (i == t.size()) return false;
  for (; i < t.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(t[i]))) return false;
  return true;
}

inline bool looks_like_float(const std::string& t) {
  std::size_t i = (t[0] == '+' || t[0] == '-') ? 1 : 0;
  bool digits = false, dot = false, exp = false;
  for (; i < t.size(); ++i) {
    const char c = t[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits = true;
    } else if (c == '.' && !dot && !exp) {
      dot = true;
    } else if ((c == 'e' || c == 'E') && digits && !exp) {
      exp = true;
      digits = false;  // require digits after the exponent
      if (i + 1 < t.size() && (t[i + 1] == '+' || t[i + 1] == '-')) ++i;
    } else {
      return false;
    }
  }
  return digits && (dot || exp);
}

inline bool bare_word(const std::string& t) {
  for (char c : t) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
                    c == '-' || c == '.' || c == '/' || c == ':';
    if (!ok) return false;
  }
  return !t.empty();
}

inline std::string parse_quoted(const std::string& t, const std::string& where) {
  std::string out;
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    char c = t[i];
    if (c == '\\') {
      if (i + 2 >= t.size())
        throw ConfigError(where + ": dangling escape in string");
      const char e = t[++i];
      switch (e) {
        case '"': c = '"'; break;
        case '\\': c = '\\'; break;
        case 'n': c = '\n'; break;
        case 't': c = '\t'; break;
        default:
          throw ConfigError(where + ": unsupported escape \\" +
                            std::string(1, e));
      }
    } else if (c == '"') {
      throw ConfigError(where + ": unescaped quote inside string");
    }
    out.push_back(c);
  }
  return out;
}

// Splits an array body on top-level commas, respecting quotes and nesting.
inline std::vector<std::string> split_array(const std::string& body,
                                            const std::string& where) {
  std::vector<std::string> parts;
  std::string cur;
  int depth = 0;
  bool in_quote = false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (in_quote) {
      cur.push_back(c);
      if (c == '\\' && i + 1 < body.size()) cur.push_back(body[++i]);
      else if (c == '"') in_quote = false;
    } else if (c == '"') {
      in_quote = true;
      cur.push_back(c);
    } else if (c == '[') {
      ++depth;
      cur.push_back(c);
    } else if (c == ']') {
      --depth;
      cur.push_back(c);
    } else if (c == ',' && depth == 0) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (in_quote || depth != 0)
    throw ConfigError(where + ": unterminated string or bracket in array");
  const std::string last = trim(cur);
  if (!last.empty()) parts.push_back(last);
  for (const std::string& p : parts)
    if (p.empty()) throw ConfigError(where + ": empty array element");
  return parts;
}

inline ConfigValue parse_value(const std::string& raw, const std::string& where) {
  const std::string t = trim(raw);
  if (t.empty()) throw ConfigError(where + ": missing value");
  if (t.front() == '"') {
    if (t.size() < 2 || t.back() != '"')
      throw ConfigError(where + ": unterminated string");
    return ConfigValue::of_string(parse_quoted(t, where));
  }
  if (t.front() == '[') {
    if (t.back() != ']') throw ConfigError(where + ": unterminated array");
    const std::string body = trim(t.substr(1, t.size() - 2));
    std::vector<ConfigValue> items;
    if (!body.empty())
      for (const std::string& part : split_array(body, where))
        items.push_back(parse_value(part, where));
    return ConfigValue::of_list(std::move(items));
  }
  if (t == "true") return ConfigValue::of_bool(true);
  if (t == "false") return ConfigValue::of_bool(false);
  if (looks_like_int(t)) {
    try {
      return ConfigValue::of_int(std::stoll(t));
    } catch (const std::out_of_range&) {
      throw ConfigError(where + ": integer out of range: " + t);
    }
  }
  if (looks_like_float(t)) return ConfigValue::of_float(std::stod(t));
  if (bare_word(t)) return ConfigValue::of_string(t);
  throw ConfigError(where + ": cannot parse value: " + t);
}

inline std::string escape_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

inline std::string render_value(const ConfigValue& v) {
  switch (v.kind) {
    case ConfigValue::Kind::kBool:
      return v.b ? "true" : "false";
    case ConfigValue::Kind::kInt:
      return std::to_string(v.i);
    case ConfigValue::Kind::kFloat: {
      std::ostringstream os;
      os.precision(17);
      os << v.f;
      const std::string t = os.str();
      // Keep floats re-parsable as floats.
      return (t.find('.') == std::string::npos &&
              t.find('e') == std::string::npos &&
              t.find("inf") == std::string::npos &&
              t.find("nan") == std::string::npos)
                 ? t + ".0"
                 : t;
    }
    case ConfigValue::Kind::kString:
      return escape_string(v.s);
    case ConfigValue::Kind::kList: {
      std::string out = "[";
      for (std::size_t i = 0; i < v.items.size(); ++i) {
        if (i) out += ", ";
        out += render_value(v.items[i]);
      }
      out.push_back(']');
      return out;
    }
  }
  return "";
}

}  // namespace config_detail

class Config {
 public:
  Config() = default;

  static Config from_string(const std::string& text,
                            const std::string& origin = "<string>") {
    Config cfg;
    cfg.parse(text, origin);
    return cfg;
  }

  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str(), path);
  }

  // Applies a `key=value` override; later overrides win over the file and
  // over earlier overrides.
  void apply_override(const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override must be key=value: " + assignment);
    const std::string key = config_detail::trim(assignment.substr(0, eq));
    if (!config_detail::valid_key(key))
      throw ConfigError("override has invalid key: " + assignment);
    entries_[key] = config_detail::parse_value(assignment.substr(eq + 1),
                                               "--set " + key);
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::int64_t get_int(const std::string& key, std::int64_t def) {
    const ConfigValue* v = lookup(key);
    if (!v) return record(key, ConfigValue::of_int(def)), def;
    if (v->kind != ConfigValue::Kind::kInt) type_error(key, *v, "integer");
    return record(key, *v), v->i;
  }

  double get_double(const std::string& key, double def) {
    const ConfigValue* v = lookup(key);
    if (!v) return record(key, ConfigValue::of_float(def)), def;
    if (v->kind == ConfigValue::Kind::kInt)
      return record(key, *v), static_cast<double>(v->i);
    if (v->kind != ConfigValue::Kind::kFloat) type_error(key, *v, "float");
    return record(key, *v), v->f;
  }

  bool get_bool(const std::string& key, bool def) {
    const ConfigValue* v = lookup(key);
    if (!v) return record(key, ConfigValue::of_bool(def)), def;
    if (v->kind != ConfigValue::Kind::kBool) type_error(key, *v, "bool");
    return record(key, *v), v->b;
  }

  std::string get_string(const std::string& key, const std::string& def) {
    const ConfigValue* v = lookup(key);
    if (!v) return record(key, ConfigValue::of_string(def)), def;
    if (v->kind != ConfigValue::Kind::kString) type_error(key, *v, "string");
    return record(key, *v), v->s;
  }

  // Required variant: throws when the key is missing.
  std::string get_string(const std::string& key) {
    const ConfigValue* v = lookup(key);
    if (!v) throw ConfigError("missing required config key: " + key);
    if (v->kind != ConfigValue::Kind::kString) type_error(key, *v, "string");
    return record(key, *v), v->s;
  }

  std::vector<std::int64_t> get_int_list(const std::string& key,
                                         std::vector<std::int64_t> def) {
    const ConfigValue* v = lookup(key);
    if (!v) {
      std::vector<ConfigValue> items;
      for (std::int64_t x : def) items.push_back(ConfigValue::of_int(x));
      record(key, ConfigValue::of_list(std::move(items)));
      return def;
    }
    if (v->kind != ConfigValue::Kind::kList) type_error(key, *v, "array");
    std::vector<std::int64_t> out;
    for (const ConfigValue& item : v->items) {
      if (item.kind != ConfigValue::Kind::kInt)
        throw ConfigError("config key " + key + ": expected integer elements");
      out.push_back(item.i);
    }
    return record(key, *v), out;
  }

  std::vector<double> get_double_list(const std::string& key,
                                      std::vector<double> def) {
    const ConfigValue* v = lookup(key);
    if (!v) {
      std::vector<ConfigValue> items;
      for (double x : def) items.push_back(ConfigValue::of_float(x));
      record(key, ConfigValue::of_list(std::move(items)));
      return def;
    }
    if (v->kind != ConfigValue::Kind::kList) type_error(key, *v, "array");
    std::vector<double> out;
    for (const ConfigValue& item : v->items) {
      if (item.kind == ConfigValue::Kind::kInt)
        out.push_back(static_cast<double>(item.i));
      else if (item.kind == ConfigValue::Kind::kFloat)
        out.push_back(item.f);
      else
        throw ConfigError("config key " + key + ": expected numeric elements");
    }
    return record(key, *v), out;
  }

  std::vector<std::string> get_string_list(const std::string& key,
                                           std::vector<std::string> def) {
    const ConfigValue* v = lookup(key);
    if (!v) {
      std::vector<ConfigValue> items;
      for (const std::string& x : def)
        items.push_back(ConfigValue::of_string(x));
      record(key, ConfigValue::of_list(std::move(items)));
      return def;
    }
    if (v->kind != ConfigValue::Kind::kList) type_error(key, *v, "array");
    std::vector<std::string> out;
    for (const ConfigValue& item : v->items) {
      if (item.kind != ConfigValue::Kind::kString)
        throw ConfigError("config key " + key + ": expected string elements");
      out.push_back(item.s);
    }
    return record(key, *v), out;
  }

  // Throws if the file or the overrides contain keys no getter consumed.
  void require_consumed() const {
    std::vector<std::string> unknown;
    for (const auto& [key, value] : entries_)
      if (consumed_.count(key) == 0) unknown.push_back(key);
    if (unknown.empty()) return;
    std::string msg = "unknown config key(s):";
    for (const std::string& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }

  // Every key the run resolved (defaults included), rendered back in the
  // input format, grouped into sections. Parsing the output reproduces the
  // same resolved values.
  std::string resolved_toml() const {
    // Group by the section prefix (everything before the last dot).
    std::map<std::string, std::vector<std::pair<std::string, ConfigValue>>>
        sections;
    for (const auto& [key, value] : resolved_) {
      const std::size_t dot = key.rfind('.');
      if (dot == std::string::npos)
        sections[""].push_back({key, value});
      else
        sections[key.substr(0, dot)].push_back({key.substr(dot + 1), value});
    }
    std::ostringstream out;
    bool first = true;
    for (const auto& [section, entries] : sections) {
      if (!first) out << "\n";
      first = false;
      if (!section.empty()) out << "[" << section << "]\n";
      for (const auto& [name, value] : entries)
        out << name << " = " << config_detail::render_value(value) << "\n";
    }
    return out.str();
  }

  void write_resolved(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << resolved_toml();
    if (!out) throw std::runtime_error("write failed: " + path);
  }

 private:
  void parse(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string where = origin + ":" + std::to_string(lineno);
      line = config_detail::trim(config_detail::strip_comment(line));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError(where + ": malformed section header");
        section = config_detail::trim(line.substr(1, line.size() - 2));
        if (!config_detail::valid_key(section))
          throw ConfigError(where + ": invalid section name: " + section);
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(where + ": expected key = value");
      std::string key = config_detail::trim(line.substr(0, eq));
      if (!config_detail::valid_key(key))
        throw ConfigError(where + ": invalid key: " + key);
      if (!section.empty()) key = section + "." + key;
      if (entries_.count(key))
        throw ConfigError(where + ": duplicate key: " + key);
      entries_[key] = config_detail::parse_value(line.substr(eq + 1), where);
    }
  }

  const ConfigValue* lookup(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    consumed_.insert(key);
    return &it->second;
  }

  void record(const std::string& key, const ConfigValue& v) {
    resolved_[key] = v;
  }

  [[noreturn]] void type_error(const std::string& key, const ConfigValue& v,
                               const char* want) {
    throw ConfigError("config key " + key + ": expected " + want + ", got " +
                      v.kind_name());
  }

  std::map<std::string, ConfigValue> entries_;
  std::set<std::string> consumed_;
  std::map<std::string, ConfigValue> resolved_;
};

}  // namespace cail
