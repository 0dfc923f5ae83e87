#pragma once

// Plain-text description of a dataset, one directive per line:
//
//   format classic | 64bit-offset
//   dim <name> <length | unlimited>
//   records <n>
//   gatt <name> <type> <values... | "text">
//   var <name> <type> [dim1,dim2,...]
//   att <var> <name> <type> <values... | "text">
//   data <var> <values... | "row" "row" ...>
//
// Lines after `data` that do not start with a directive keyword continue
// the value list. `#` starts a comment outside quotes. Char data is given as
// one quoted string per row of the last dimension, NUL-padded on read.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "etsf/error.hpp"
#include "etsf/netcdf.hpp"

namespace etsf::manifest {

namespace detail {

struct Token {
  std::string text;
  bool quoted = false;
};

inline const std::vector<std::string_view>& keywords() {
  static const std::vector<std::string_view> k{"format", "dim", "records", "gatt", "var", "att", "data"};
  return k;
}

inline bool is_keyword(std::string_view s) {
  for (auto k : keywords())
    if (k == s) return true;
  return false;
}

[[noreturn]] inline void fail(std::size_t line, const std::string& what) {
  throw Error(Errc::ManifestSyntax, "line " + std::to_string(line) + ": " + what);
}

inline int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

inline std::vector<Token> tokenize(std::string_view line, std::size_t lineno) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
    } else if (c == '#') {
      break;
    } else if (c == '"') {
      Token t{{}, true};
      ++i;
      bool closed = false;
      while (i < line.size()) {
        char ch = line[i++];
        if (ch == '"') {
          closed = true;
          break;
        }
        if (ch != '\\') {
          t.text += ch;
          continue;
        }
        if (i >= line.size()) fail(lineno, "dangling escape");
        char e = line[i++];
        switch (e) {
          case 'n': t.text += '\n'; break;
          case 't': t.text += '\t'; break;
          case 'r': t.text += '\r'; break;
          case '0': t.text += '\0'; break;
          case '\\': t.text += '\\'; break;
          case '"': t.text += '"'; break;
          case 'x': {
            if (i + 2 > line.size() || hex_digit(line[i]) < 0 || hex_digit(line[i + 1]) < 0)
              fail(lineno, "bad \\x escape");
            t.text += static_cast<char>(hex_digit(line[i]) * 16 + hex_digit(line[i + 1]));
            i += 2;
            break;
          }
          default: fail(lineno, std::string("unknown escape \\") + e);
        }
      }
      if (!closed) fail(lineno, "unterminated string");
      out.push_back(std::move(t));
    } else {
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r' && line[j] != '#') ++j;
      out.push_back({std::string(line.substr(i, j - i)), false});
      i = j;
    }
  }
  return out;
}

inline std::size_t parse_count(const Token& t, std::size_t lineno) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
  if (t.quoted || ec != std::errc{} || p != t.text.data() + t.text.size()) fail(lineno, "expected a count, got '" + t.text + "'");
  return v;
}

inline nc::Type parse_type(const Token& t, std::size_t lineno) {
  auto type = nc::parse_type_name(t.text);
  if (!type || t.quoted) fail(lineno, "unknown type '" + t.text + "'");
  return *type;
}

template <class T>
T parse_number(const Token& t, std::size_t lineno) {
  if (t.quoted) fail(lineno, "expected a number, got a string");
  const char* b = t.text.data();
  const char* e = b + t.text.size();
  T v{};
  if constexpr (std::is_floating_point_v<T>) {
    if (b != e && *b == '+') ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || p != e) fail(lineno, "bad number '" + t.text + "'");
  } else {
    long long wide = 0;
    auto [p, ec] = std::from_chars(b, e, wide);
    if (ec != std::errc{} || p != e) fail(lineno, "bad integer '" + t.text + "'");
    if (wide < std::numeric_limits<T>::min() || wide > std::numeric_limits<T>::max())
      fail(lineno, "integer '" + t.text + "' out of range");
    v = static_cast<T>(wide);
  }
  return v;
}

inline nc::Array parse_values(nc::Type type, const std::vector<Token>& tokens, std::size_t first, std::size_t lineno,
                              std::size_t row_width) {
  nc::Array out = nc::make_array(type);
  if (type == nc::Type::Char) {
    auto& s = std::get<std::string>(out);
    for (std::size_t i = first; i < tokens.size(); ++i) {
      if (!tokens[i].quoted) fail(lineno, "char values must be quoted");
      std::string row = tokens[i].text;
      if (row_width) {
        if (row.size() > row_width)
          fail(lineno, "string longer than the row width " + std::to_string(row_width));
        row.resize(row_width, '\0');
      }
      s += row;
    }
    return out;
  }
  std::visit(
      [&](auto& v) {
        using V = std::decay_t<decltype(v)>;
        if constexpr (!std::is_same_v<V, std::string>) {
          using E = typename V::value_type;
          for (std::size_t i = first; i < tokens.size(); ++i) v.push_back(parse_number<E>(tokens[i], lineno));
        }
      },
      out);
  return out;
}

inline void append(nc::Array& into, const nc::Array& more) {
  std::visit(
      [&](auto& v) {
        using V = std::decay_t<decltype(v)>;
        const auto& m = std::get<V>(more);
        v.insert(v.end(), m.begin(), m.end());
      },
      into);
}

inline std::string quote(std::string_view s) {
  static constexpr char hex[] = "0123456789abcdef";
  std::string out = "\"";
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20 || c >= 0x7f) {
          out += "\\x";
          out += hex[c >> 4];
          out += hex[c & 15];
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  return out + "\"";
}

template <class T>
std::string format_number(T v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline std::vector<std::string> value_tokens(const nc::Array& a, std::size_t row_width) {
  std::vector<std::string> out;
  std::visit(
      [&](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, std::string>) {
          if (row_width == 0) {
            out.push_back(quote(v));
            return;
          }
          for (std::size_t i = 0; i < v.size(); i += row_width) {
            std::string_view row(v.data() + i, std::min(row_width, v.size() - i));
            auto end = row.find_last_not_of('\0');
            out.push_back(quote(end == std::string_view::npos ? std::string_view{} : row.substr(0, end + 1)));
          }
        } else {
          for (auto x : v) {
            if constexpr (sizeof(x) == 1)
              out.push_back(std::to_string(static_cast<int>(x)));
            else
              out.push_back(format_number(x));
          }
        }
      },
      a);
  return out;
}

inline std::string join_lines(const std::vector<std::string>& tokens, std::string head, std::size_t per_line = 8) {
  std::string out = std::move(head);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out += (i > 0 && i % per_line == 0) ? "\n  " : " ";
    out += tokens[i];
  }
  return out + "\n";
}

}  // namespace detail

/// Builds a dataset from manifest text. Throws ManifestSyntax naming the line.
inline nc::Dataset parse_manifest(std::string_view text) {
  using detail::fail;
  nc::Dataset ds;
  std::optional<std::size_t> records;
  std::optional<std::size_t> inferred_records;
  nc::Variable* open_data = nullptr;
  std::vector<std::pair<std::string, std::size_t>> filled;

  auto row_width = [&](const nc::Variable& v) -> std::size_t {
    if (v.type() != nc::Type::Char || v.dims.empty()) return 0;
    const auto& d = ds.dims[v.dims.back()];
    return d.is_record() ? 1 : d.length;
  };

  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    const auto tokens = detail::tokenize(line, lineno);
    if (tokens.empty()) continue;

    const auto& head = tokens[0];
    if (head.quoted || !detail::is_keyword(head.text)) {
      if (!open_data) fail(lineno, "unknown directive '" + head.text + "'");
      detail::append(open_data->data, detail::parse_values(open_data->type(), tokens, 0, lineno, row_width(*open_data)));
      continue;
    }
    open_data = nullptr;
    const auto& kw = head.text;
    auto need = [&](std::size_t n) {
      if (tokens.size() < n) fail(lineno, "'" + kw + "' needs at least " + std::to_string(n - 1) + " arguments");
    };

    if (kw == "format") {
      need(2);
      if (tokens[1].text == "classic")
        ds.format = nc::Format::Classic;
      else if (tokens[1].text == "64bit-offset")
        ds.format = nc::Format::Offset64;
      else
        fail(lineno, "unknown format '" + tokens[1].text + "'");
    } else if (kw == "dim") {
      need(3);
      if (ds.dim_id(tokens[1].text)) fail(lineno, "dimension '" + tokens[1].text + "' defined twice");
      const std::size_t len = tokens[2].text == "unlimited" ? 0 : detail::parse_count(tokens[2], lineno);
      if (len == 0 && tokens[2].text != "unlimited") fail(lineno, "fixed dimension length must be positive");
      ds.add_dim(tokens[1].text, len);
    } else if (kw == "records") {
      need(2);
      records = detail::parse_count(tokens[1], lineno);
    } else if (kw == "gatt" || kw == "att") {
      const bool global = kw == "gatt";
      need(global ? 3 : 4);
      nc::AttributeList* list = &ds.attrs;
      std::size_t at = 1;
      if (!global) {
        auto* v = ds.find_var(tokens[1].text);
        if (!v) fail(lineno, "attribute for undeclared variable '" + tokens[1].text + "'");
        list = &v->attrs;
        at = 2;
      }
      const auto type = detail::parse_type(tokens[at + 1], lineno);
      auto value = detail::parse_values(type, tokens, at + 2, lineno, 0);
      if (nc::find_attribute(*list, tokens[at].text)) fail(lineno, "attribute '" + tokens[at].text + "' defined twice");
      list->push_back({tokens[at].text, std::move(value)});
    } else if (kw == "var") {
      need(3);
      if (ds.find_var(tokens[1].text)) fail(lineno, "variable '" + tokens[1].text + "' defined twice");
      const auto type = detail::parse_type(tokens[2], lineno);
      std::vector<std::string> dims;
      if (tokens.size() > 3) {
        std::string dim_list;
        for (std::size_t i = 3; i < tokens.size(); ++i) dim_list += tokens[i].text;
        if (dim_list.size() < 2 || dim_list.front() != '[' || dim_list.back() != ']') fail(lineno, "dimensions must be [a,b,...]");
        dim_list = dim_list.substr(1, dim_list.size() - 2);
        std::size_t s = 0;
        while (!dim_list.empty() && s <= dim_list.size()) {
          auto comma = dim_list.find(',', s);
          if (comma == std::string::npos) comma = dim_list.size();
          dims.push_back(dim_list.substr(s, comma - s));
          s = comma + 1;
        }
      }
      try {
        ds.add_var(tokens[1].text, dims, nc::make_array(type));
      } catch (const Error& e) {
        fail(lineno, e.what());
      }
    } else if (kw == "data") {
      need(2);
      auto* v = ds.find_var(tokens[1].text);
      if (!v) fail(lineno, "data for undeclared variable '" + tokens[1].text + "'");
      if (std::any_of(filled.begin(), filled.end(), [&](const auto& f) { return f.first == v->name; }))
        fail(lineno, "data for '" + v->name + "' given twice");
      filled.emplace_back(v->name, lineno);
      v->data = detail::parse_values(v->type(), tokens, 2, lineno, row_width(*v));
      open_data = v;
    }
  }

  // Record count: explicit, or implied by the first record variable.
  for (const auto& v : ds.vars) {
    if (!ds.is_record_var(v)) continue;
    std::size_t per_record = 1;
    for (std::size_t i = 1; i < v.dims.size(); ++i) per_record *= ds.dims[v.dims[i]].length;
    if (per_record && !inferred_records) inferred_records = nc::size_of(v.data) / per_record;
  }
  ds.record_count = records.value_or(inferred_records.value_or(0));

  for (auto& v : ds.vars) {
    const auto want = ds.element_count(v);
    const auto have = nc::size_of(v.data);
    if (have == 0 && want > 0) {
      v.data = nc::make_array(v.type(), want);
    } else if (have != want) {
      const auto at = std::find_if(filled.begin(), filled.end(), [&](const auto& f) { return f.first == v.name; });
      fail(at == filled.end() ? lineno : at->second,
           "variable '" + v.name + "' has " + std::to_string(have) + " values, expected " + std::to_string(want));
    }
  }
  return ds;
}

/// Manifest text that parses back to an equal dataset.
inline std::string to_manifest(const nc::Dataset& ds) {
  std::string out;
  out += ds.format == nc::Format::Offset64 ? "format 64bit-offset\n" : "format classic\n";
  for (const auto& d : ds.dims)
    out += "dim " + d.name + " " + (d.is_record() ? std::string("unlimited") : std::to_string(d.length)) + "\n";
  if (std::any_of(ds.dims.begin(), ds.dims.end(), [](const nc::Dimension& d) { return d.is_record(); }))
    out += "records " + std::to_string(ds.record_count) + "\n";
  for (const auto& a : ds.attrs)
    out += detail::join_lines(detail::value_tokens(a.value, 0),
                              "gatt " + a.name + " " + std::string(nc::type_name(nc::type_of(a.value))));
  for (const auto& v : ds.vars) {
    out += "var " + v.name + " " + std::string(nc::type_name(v.type())) + " [";
    for (std::size_t i = 0; i < v.dims.size(); ++i) out += (i ? "," : "") + ds.dims.at(v.dims[i]).name;
    out += "]\n";
    for (const auto& a : v.attrs)
      out += detail::join_lines(detail::value_tokens(a.value, 0),
                                "att " + v.name + " " + a.name + " " + std::string(nc::type_name(nc::type_of(a.value))));
  }
  for (const auto& v : ds.vars) {
    if (nc::size_of(v.data) == 0) continue;
    std::size_t width = 0;
    if (!v.dims.empty()) {
      const auto& d = ds.dims.at(v.dims.back());
      width = d.is_record() ? 1 : d.length;
    }
    const auto tokens = detail::value_tokens(v.data, v.type() == nc::Type::Char ? width : 0);
    if (v.dims.empty()) {
      out += detail::join_lines(tokens, "data " + v.name);
      continue;
    }
    const std::size_t per_line = v.type() == nc::Type::Char ? 1 : std::clamp<std::size_t>(width, 1, 12);
    out += "data " + v.name + "\n";
    for (std::size_t i = 0; i < tokens.size(); i += per_line) {
      out += " ";
      for (std::size_t j = i; j < std::min(tokens.size(), i + per_line); ++j) out += " " + tokens[j];
      out += "\n";
    }
  }
  return out;
}

}  // namespace etsf::manifest
