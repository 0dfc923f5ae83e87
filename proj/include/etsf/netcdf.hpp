#pragma once

// Self-contained reader/writer for the NetCDF classic container (CDF-1 and
// the 64-bit offset variant CDF-2). Header-only; no dependency on libnetcdf.
//
// On-disk grammar (all integers big-endian):
//
//   file    = magic numrecs dim_list gatt_list var_list data
//   magic   = 'C' 'D' 'F' (0x01 | 0x02)
//   list    = ABSENT (8 zero bytes) | tag nelems item...
//   name    = nelems chars pad-to-4
//   attr    = name nc_type nelems values pad-to-4
//   var     = name ndims dimid... vatt_list nc_type vsize begin
//
// `begin` is 32 bits wide in CDF-1 and 64 bits wide in CDF-2.

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "etsf/error.hpp"

namespace etsf::nc {

inline constexpr std::size_t max_rank = 8;

/// External element types; the numeric values are the on-disk nc_type codes.
enum class Type : std::uint32_t { Byte = 1, Char = 2, Short = 3, Int = 4, Float = 5, Double = 6 };

enum class Format { Classic, Offset64 };

/// Typed payload of an attribute or variable. The alternative index plus one
/// is the nc_type code, so the variant also carries the element type.
using Array = std::variant<std::vector<std::int8_t>, std::string, std::vector<std::int16_t>,
                           std::vector<std::int32_t>, std::vector<float>, std::vector<double>>;

constexpr std::size_t type_size(Type t) {
  switch (t) {
    case Type::Byte:
    case Type::Char: return 1;
    case Type::Short: return 2;
    case Type::Int:
    case Type::Float: return 4;
    case Type::Double: return 8;
  }
  return 0;
}

constexpr std::string_view type_name(Type t) {
  switch (t) {
    case Type::Byte: return "byte";
    case Type::Char: return "char";
    case Type::Short: return "short";
    case Type::Int: return "int";
    case Type::Float: return "float";
    case Type::Double: return "double";
  }
  return "?";
}

inline std::optional<Type> parse_type_name(std::string_view s) {
  for (auto t : {Type::Byte, Type::Char, Type::Short, Type::Int, Type::Float, Type::Double})
    if (type_name(t) == s) return t;
  return std::nullopt;
}

inline Type type_of(const Array& a) { return static_cast<Type>(a.index() + 1); }

inline std::size_t size_of(const Array& a) {
  return std::visit([](const auto& v) { return v.size(); }, a);
}

/// Empty array of the given element type.
inline Array make_array(Type t, std::size_t n = 0) {
  switch (t) {
    case Type::Byte: return std::vector<std::int8_t>(n);
    case Type::Char: return std::string(n, '\0');
    case Type::Short: return std::vector<std::int16_t>(n);
    case Type::Int: return std::vector<std::int32_t>(n);
    case Type::Float: return std::vector<float>(n);
    case Type::Double: return std::vector<double>(n);
  }
  return {};
}

/// Numeric payload widened to double. Char payloads throw.
inline std::vector<double> to_doubles(const Array& a) {
  return std::visit(
      [](const auto& v) -> std::vector<double> {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, std::string>) {
          throw Error(Errc::ShapeMismatch, "character data has no numeric value");
        } else {
          return std::vector<double>(v.begin(), v.end());
        }
      },
      a);
}

/// Removes trailing NUL and space padding.
inline std::string strip_padding(std::string_view s) {
  auto end = s.find_last_not_of(std::string_view("\0 ", 2));
  return std::string(end == std::string_view::npos ? std::string_view{} : s.substr(0, end + 1));
}

struct Dimension {
  std::string name;
  std::size_t length = 0;  ///< 0 marks the record (unlimited) dimension

  bool is_record() const { return length == 0; }
  friend bool operator==(const Dimension&, const Dimension&) = default;
};

struct Attribute {
  std::string name;
  Array value;

  friend bool operator==(const Attribute&, const Attribute&) = default;
};

using AttributeList = std::vector<Attribute>;

inline const Attribute* find_attribute(const AttributeList& list, std::string_view name) {
  for (const auto& a : list)
    if (a.name == name) return &a;
  return nullptr;
}

/// Char attribute as a string; nullopt when absent or not of char type.
inline std::optional<std::string> string_attribute(const AttributeList& list, std::string_view name) {
  const auto* a = find_attribute(list, name);
  if (!a) return std::nullopt;
  if (const auto* s = std::get_if<std::string>(&a->value)) return *s;
  return std::nullopt;
}

/// Sets (or replaces) an attribute, keeping the position of an existing one.
inline void set_attribute(AttributeList& list, std::string name, Array value) {
  for (auto& a : list)
    if (a.name == name) {
      a.value = std::move(value);
      return;
    }
  list.push_back({std::move(name), std::move(value)});
}

inline bool erase_attribute(AttributeList& list, std::string_view name) {
  auto it = std::find_if(list.begin(), list.end(), [&](const Attribute& a) { return a.name == name; });
  if (it == list.end()) return false;
  list.erase(it);
  return true;
}

struct Variable {
  std::string name;
  std::vector<std::size_t> dims;  ///< dimension ids, slowest first
  AttributeList attrs;
  Array data;  ///< row-major payload; its alternative fixes the element type

  Type type() const { return type_of(data); }
  std::size_t rank() const { return dims.size(); }
  friend bool operator==(const Variable&, const Variable&) = default;
};

struct Dataset {
  Format format = Format::Classic;
  std::vector<Dimension> dims;
  AttributeList attrs;
  std::vector<Variable> vars;
  std::size_t record_count = 0;  ///< number of records along the record dimension

  friend bool operator==(const Dataset&, const Dataset&) = default;

  std::optional<std::size_t> dim_id(std::string_view name) const {
    for (std::size_t i = 0; i < dims.size(); ++i)
      if (dims[i].name == name) return i;
    return std::nullopt;
  }

  /// Effective length: the record count for the record dimension.
  std::size_t dim_length(std::size_t id) const {
    return dims.at(id).is_record() ? record_count : dims.at(id).length;
  }

  std::optional<std::size_t> dim_length(std::string_view name) const {
    auto id = dim_id(name);
    if (!id) return std::nullopt;
    return dim_length(*id);
  }

  const Variable* find_var(std::string_view name) const {
    for (const auto& v : vars)
      if (v.name == name) return &v;
    return nullptr;
  }

  Variable* find_var(std::string_view name) {
    for (auto& v : vars)
      if (v.name == name) return &v;
    return nullptr;
  }

  bool is_record_var(const Variable& v) const {
    return !v.dims.empty() && v.dims.front() < dims.size() && dims[v.dims.front()].is_record();
  }

  std::vector<std::size_t> shape(const Variable& v) const {
    std::vector<std::size_t> s;
    s.reserve(v.dims.size());
    for (auto d : v.dims) s.push_back(dim_length(d));
    return s;
  }

  std::vector<std::string> dim_names(const Variable& v) const {
    std::vector<std::string> s;
    for (auto d : v.dims) s.push_back(dims.at(d).name);
    return s;
  }

  std::size_t element_count(const Variable& v) const {
    std::size_t n = 1;
    for (auto d : v.dims) n *= dim_length(d);
    return n;
  }

  /// Appends a dimension and returns its id.
  std::size_t add_dim(std::string name, std::size_t length) {
    dims.push_back({std::move(name), length});
    return dims.size() - 1;
  }

  /// Appends a variable over named dimensions. Throws InvalidDataset when a
  /// dimension name does not resolve.
  Variable& add_var(std::string name, const std::vector<std::string>& dim_names, Array data) {
    Variable v{std::move(name), {}, {}, std::move(data)};
    for (const auto& dn : dim_names) {
      auto id = dim_id(dn);
      if (!id) throw Error(Errc::InvalidDataset, "unknown dimension '" + dn + "'");
      v.dims.push_back(*id);
    }
    vars.push_back(std::move(v));
    return vars.back();
  }
};

namespace detail {

inline constexpr std::uint32_t tag_dimension = 0x0A;
inline constexpr std::uint32_t tag_variable = 0x0B;
inline constexpr std::uint32_t tag_attribute = 0x0C;
inline constexpr std::uint32_t streaming = 0xFFFFFFFFu;

constexpr std::uint64_t pad4(std::uint64_t n) { return (n + 3) & ~std::uint64_t{3}; }

template <class T>
using unsigned_of = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                                       std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                                          std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                                             std::uint64_t>>>;

template <class T>
void put_be(std::vector<std::uint8_t>& out, T value) {
  auto u = std::bit_cast<unsigned_of<T>>(value);
  for (int shift = 8 * (static_cast<int>(sizeof(T)) - 1); shift >= 0; shift -= 8)
    out.push_back(static_cast<std::uint8_t>((u >> shift) & 0xFF));
}

template <class T>
T get_be(const std::uint8_t* p) {
  unsigned_of<T> u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u = static_cast<unsigned_of<T>>((u << 8) | p[i]);
  return std::bit_cast<T>(u);
}

inline void put_padding(std::vector<std::uint8_t>& out, std::uint64_t nbytes) {
  out.insert(out.end(), static_cast<std::size_t>(pad4(nbytes) - nbytes), std::uint8_t{0});
}

inline void put_values(std::vector<std::uint8_t>& out, const Array& a) {
  std::visit(
      [&](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, std::string>) {
          out.insert(out.end(), v.begin(), v.end());
        } else {
          for (auto x : v) put_be(out, x);
        }
      },
      a);
}

inline void put_name(std::vector<std::uint8_t>& out, std::string_view name) {
  put_be(out, static_cast<std::uint32_t>(name.size()));
  out.insert(out.end(), name.begin(), name.end());
  put_padding(out, name.size());
}

inline void put_attributes(std::vector<std::uint8_t>& out, const AttributeList& attrs) {
  if (attrs.empty()) {
    put_be(out, std::uint32_t{0});
    put_be(out, std::uint32_t{0});
    return;
  }
  put_be(out, tag_attribute);
  put_be(out, static_cast<std::uint32_t>(attrs.size()));
  for (const auto& a : attrs) {
    put_name(out, a.name);
    put_be(out, static_cast<std::uint32_t>(type_of(a.value)));
    put_be(out, static_cast<std::uint32_t>(size_of(a.value)));
    put_values(out, a.value);
    put_padding(out, size_of(a.value) * type_size(type_of(a.value)));
  }
}

/// Bounds-checked big-endian cursor over the input bytes.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t pos() const { return pos_; }

  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_)
      throw Error(Errc::TruncatedFile, "header ends unexpectedly at offset " + std::to_string(pos_));
  }

  template <class T>
  T get() {
    need(sizeof(T));
    T v = get_be<T>(bytes_.data() + pos_);
    pos_ += sizeof(T);
    return v;
  }

  std::string_view raw(std::uint64_t n) {
    need(n);
    std::string_view s(reinterpret_cast<const char*>(bytes_.data() + pos_), static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return s;
  }

  void skip_padding(std::uint64_t n) { raw(pad4(n) - n); }

  std::string name() {
    auto n = get<std::uint32_t>();
    if (n == 0) throw Error(Errc::MalformedHeader, "empty name at offset " + std::to_string(pos_ - 4));
    std::string s(raw(n));
    skip_padding(n);
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <class T>
void decode_into(std::vector<T>& out, const std::uint8_t* p, std::size_t n) {
  out.reserve(out.size() + n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(get_be<T>(p + i * sizeof(T)));
}

inline void decode_into(std::string& out, const std::uint8_t* p, std::size_t n) {
  out.append(reinterpret_cast<const char*>(p), n);
}

inline Type read_type(Reader& in) {
  auto code = in.get<std::uint32_t>();
  if (code < 1 || code > 6)
    throw Error(Errc::MalformedHeader, "unknown nc_type " + std::to_string(code));
  return static_cast<Type>(code);
}

inline AttributeList read_attributes(Reader& in) {
  auto tag = in.get<std::uint32_t>();
  auto count = in.get<std::uint32_t>();
  AttributeList attrs;
  if (tag == 0) {
    if (count != 0) throw Error(Errc::MalformedHeader, "ABSENT attribute list with nonzero count");
    return attrs;
  }
  if (tag != tag_attribute) throw Error(Errc::MalformedHeader, "expected NC_ATTRIBUTE tag");
  for (std::uint32_t i = 0; i < count; ++i) {
    Attribute a;
    a.name = in.name();
    auto t = read_type(in);
    auto n = in.get<std::uint32_t>();
    std::uint64_t nbytes = std::uint64_t{n} * type_size(t);
    auto raw = in.raw(nbytes);
    a.value = make_array(t);
    std::visit([&](auto& v) { decode_into(v, reinterpret_cast<const std::uint8_t*>(raw.data()), n); },
               a.value);
    if (auto* s = std::get_if<std::string>(&a.value)) *s = strip_padding(*s);
    in.skip_padding(nbytes);
    if (find_attribute(attrs, a.name))
      throw Error(Errc::MalformedHeader, "duplicate attribute '" + a.name + "'");
    attrs.push_back(std::move(a));
  }
  return attrs;
}

inline void check_names(const AttributeList& attrs, const std::string& owner) {
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (attrs[i].name.empty()) throw Error(Errc::InvalidDataset, "empty attribute name on " + owner);
    for (std::size_t j = 0; j < i; ++j)
      if (attrs[i].name == attrs[j].name)
        throw Error(Errc::NameClash, "duplicate attribute '" + attrs[i].name + "' on " + owner);
  }
}

inline std::uint64_t attributes_size(const AttributeList& attrs) {
  std::uint64_t n = 8;
  for (const auto& a : attrs)
    n += 4 + pad4(a.name.size()) + 8 + pad4(size_of(a.value) * type_size(type_of(a.value)));
  return n;
}

}  // namespace detail

/// Byte layout of a dataset in canonical form.
struct Layout {
  struct Entry {
    bool record = false;
    std::uint64_t bytes = 0;  ///< unpadded data bytes (per record for record variables)
    std::uint64_t vsize = 0;  ///< padded size as stored in the header
    std::uint64_t begin = 0;
  };
  std::uint64_t header_size = 0;
  std::uint64_t record_size = 0;
  std::uint64_t file_size = 0;
  std::vector<Entry> vars;
};

/// Validates the structural invariants of `ds` (names, dimension references,
/// record-dimension placement, rank) and computes the canonical layout.
/// Payloads are not inspected.
inline Layout plan_layout(const Dataset& ds) {
  using detail::pad4;
  const bool wide = ds.format == Format::Offset64;

  std::optional<std::size_t> record_dim;
  for (std::size_t i = 0; i < ds.dims.size(); ++i) {
    const auto& d = ds.dims[i];
    if (d.name.empty()) throw Error(Errc::InvalidDataset, "empty dimension name");
    for (std::size_t j = 0; j < i; ++j)
      if (ds.dims[j].name == d.name) throw Error(Errc::NameClash, "duplicate dimension '" + d.name + "'");
    if (d.is_record()) {
      if (record_dim) throw Error(Errc::InvalidDataset, "more than one record dimension");
      record_dim = i;
    }
    if (d.length > std::numeric_limits<std::int32_t>::max())
      throw Error(Errc::OffsetOverflow, "dimension '" + d.name + "' too long");
  }
  detail::check_names(ds.attrs, "global attributes");
  if (ds.record_count >= detail::streaming) throw Error(Errc::OffsetOverflow, "record count too large");

  Layout layout;
  std::uint64_t header = 4 + 4 + 8 + 8 + 8;
  for (const auto& d : ds.dims) header += 4 + pad4(d.name.size()) + 4;
  for (const auto& a : ds.attrs) header += 4 + pad4(a.name.size()) + 8 + pad4(size_of(a.value) * type_size(type_of(a.value)));

  for (std::size_t i = 0; i < ds.vars.size(); ++i) {
    const auto& v = ds.vars[i];
    if (v.name.empty()) throw Error(Errc::InvalidDataset, "empty variable name");
    for (std::size_t j = 0; j < i; ++j)
      if (ds.vars[j].name == v.name) throw Error(Errc::NameClash, "duplicate variable '" + v.name + "'");
    if (v.rank() > max_rank)
      throw Error(Errc::InvalidDataset, "variable '" + v.name + "' exceeds rank " + std::to_string(max_rank));
    for (std::size_t k = 0; k < v.dims.size(); ++k) {
      if (v.dims[k] >= ds.dims.size())
        throw Error(Errc::InvalidDataset, "variable '" + v.name + "' references unknown dimension id");
      if (k > 0 && ds.dims[v.dims[k]].is_record())
        throw Error(Errc::InvalidDataset, "record dimension must be first in '" + v.name + "'");
    }
    detail::check_names(v.attrs, "variable '" + v.name + "'");
    header += 4 + pad4(v.name.size()) + 4 + 4 * v.rank() + detail::attributes_size(v.attrs) + 4 + 4 +
              (wide ? 8 : 4);

    Layout::Entry e;
    e.record = ds.is_record_var(v);
    std::uint64_t n = 1;
    for (std::size_t k = e.record ? 1 : 0; k < v.dims.size(); ++k) n *= ds.dims[v.dims[k]].length;
    e.bytes = n * type_size(v.type());
    e.vsize = pad4(e.bytes);
    layout.vars.push_back(e);
  }
  layout.header_size = header;

  const std::uint64_t max_offset =
      wide ? static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())
           : static_cast<std::uint64_t>(std::numeric_limits<std::int32_t>::max());

  std::uint64_t offset = header;
  std::size_t record_vars = 0;
  std::optional<std::size_t> last_fixed;
  for (std::size_t i = 0; i < ds.vars.size(); ++i) {
    auto& e = layout.vars[i];
    if (e.record) {
      ++record_vars;
      continue;
    }
    if (offset > max_offset)
      throw Error(Errc::OffsetOverflow, "variable '" + ds.vars[i].name + "' begins beyond the offset range");
    e.begin = offset;
    offset += e.vsize;
    last_fixed = i;
  }
  for (std::size_t i = 0; i < ds.vars.size(); ++i) {
    const auto& e = layout.vars[i];
    if (e.vsize >= detail::streaming && (record_vars > 0 || last_fixed != i) && !e.record)
      throw Error(Errc::OffsetOverflow, "variable '" + ds.vars[i].name + "' is too large for a 32-bit vsize");
  }

  // Records follow the fixed data, interleaved.
  const std::uint64_t records_begin = offset;
  std::uint64_t in_record = 0;
  for (std::size_t i = 0; i < ds.vars.size(); ++i) {
    auto& e = layout.vars[i];
    if (!e.record) continue;
    if (records_begin + in_record > max_offset)
      throw Error(Errc::OffsetOverflow, "record variable '" + ds.vars[i].name + "' begins beyond the offset range");
    e.begin = records_begin + in_record;
    in_record += e.vsize;
  }
  if (record_vars == 1) {
    // A lone record variable is stored without inter-record padding.
    for (const auto& e : layout.vars)
      if (e.record) in_record = e.bytes;
  }
  layout.record_size = in_record;
  layout.file_size = records_begin + in_record * ds.record_count;
  return layout;
}

/// Serializes `ds` in canonical form: entities in model order, data laid out
/// immediately after the header, zero padding to 4-byte boundaries.
inline std::vector<std::uint8_t> write(const Dataset& ds) {
  using namespace detail;
  const Layout layout = plan_layout(ds);
  for (std::size_t i = 0; i < ds.vars.size(); ++i) {
    const auto& v = ds.vars[i];
    if (size_of(v.data) != ds.element_count(v))
      throw Error(Errc::InvalidDataset, "payload of '" + v.name + "' has " + std::to_string(size_of(v.data)) +
                                            " elements, shape requires " + std::to_string(ds.element_count(v)));
  }

  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(layout.file_size));
  for (char c : {'C', 'D', 'F'}) out.push_back(static_cast<std::uint8_t>(c));
  out.push_back(ds.format == Format::Offset64 ? 2 : 1);
  put_be(out, static_cast<std::uint32_t>(ds.record_count));

  if (ds.dims.empty()) {
    put_be(out, std::uint32_t{0});
    put_be(out, std::uint32_t{0});
  } else {
    put_be(out, tag_dimension);
    put_be(out, static_cast<std::uint32_t>(ds.dims.size()));
    for (const auto& d : ds.dims) {
      put_name(out, d.name);
      put_be(out, static_cast<std::uint32_t>(d.length));
    }
  }
  put_attributes(out, ds.attrs);

  if (ds.vars.empty()) {
    put_be(out, std::uint32_t{0});
    put_be(out, std::uint32_t{0});
  } else {
    put_be(out, tag_variable);
    put_be(out, static_cast<std::uint32_t>(ds.vars.size()));
    for (std::size_t i = 0; i < ds.vars.size(); ++i) {
      const auto& v = ds.vars[i];
      const auto& e = layout.vars[i];
      put_name(out, v.name);
      put_be(out, static_cast<std::uint32_t>(v.rank()));
      for (auto d : v.dims) put_be(out, static_cast<std::uint32_t>(d));
      put_attributes(out, v.attrs);
      put_be(out, static_cast<std::uint32_t>(v.type()));
      put_be(out, e.vsize >= streaming ? streaming : static_cast<std::uint32_t>(e.vsize));
      if (ds.format == Format::Offset64)
        put_be(out, e.begin);
      else
        put_be(out, static_cast<std::uint32_t>(e.begin));
    }
  }

  for (std::size_t i = 0; i < ds.vars.size(); ++i) {
    const auto& e = layout.vars[i];
    if (e.record) continue;
    put_values(out, ds.vars[i].data);
    put_padding(out, e.bytes);
  }
  const auto record_vars = std::count_if(layout.vars.begin(), layout.vars.end(),
                                         [](const Layout::Entry& e) { return e.record; });
  for (std::size_t r = 0; r < ds.record_count; ++r) {
    for (std::size_t i = 0; i < ds.vars.size(); ++i) {
      const auto& e = layout.vars[i];
      if (!e.record) continue;
      const auto per = static_cast<std::size_t>(e.bytes / type_size(ds.vars[i].type()));
      std::visit(
          [&](const auto& v) {
            using V = std::decay_t<decltype(v)>;
            V slice(v.begin() + static_cast<std::ptrdiff_t>(r * per),
                    v.begin() + static_cast<std::ptrdiff_t>((r + 1) * per));
            put_values(out, slice);
          },
          ds.vars[i].data);
      if (record_vars > 1) put_padding(out, e.bytes);
    }
  }
  out.resize(static_cast<std::size_t>(layout.file_size), 0);
  return out;
}

/// Decodes a classic container. Data offsets are taken from the header, so
/// files from other producers with non-canonical layouts are accepted.
inline Dataset parse(std::span<const std::uint8_t> bytes) {
  using namespace detail;
  if (bytes.size() >= 4 && bytes[0] == 0x89 && bytes[1] == 'H' && bytes[2] == 'D' && bytes[3] == 'F')
    throw Error(Errc::Hdf5Container, "NetCDF-4/HDF5 containers are not supported");
  if (bytes.size() < 4 || bytes[0] != 'C' || bytes[1] != 'D' || bytes[2] != 'F')
    throw Error(Errc::BadMagic, "not a NetCDF classic file");
  if (bytes[3] != 1 && bytes[3] != 2)
    throw Error(Errc::UnsupportedVariant, "version byte " + std::to_string(bytes[3]));

  Dataset ds;
  ds.format = bytes[3] == 2 ? Format::Offset64 : Format::Classic;
  Reader in(bytes);
  in.raw(4);
  const auto numrecs = in.get<std::uint32_t>();

  {
    auto tag = in.get<std::uint32_t>();
    auto count = in.get<std::uint32_t>();
    if (tag == 0) {
      if (count != 0) throw Error(Errc::MalformedHeader, "ABSENT dimension list with nonzero count");
    } else if (tag != tag_dimension) {
      throw Error(Errc::MalformedHeader, "expected NC_DIMENSION tag");
    }
    for (std::uint32_t i = 0; i < count && tag != 0; ++i) {
      Dimension d;
      d.name = in.name();
      d.length = in.get<std::uint32_t>();
      if (ds.dim_id(d.name)) throw Error(Errc::MalformedHeader, "duplicate dimension '" + d.name + "'");
      if (d.is_record())
        for (const auto& o : ds.dims)
          if (o.is_record()) throw Error(Errc::MalformedHeader, "more than one record dimension");
      ds.dims.push_back(std::move(d));
    }
  }
  ds.attrs = read_attributes(in);

  std::vector<std::uint64_t> begins;
  {
    auto tag = in.get<std::uint32_t>();
    auto count = in.get<std::uint32_t>();
    if (tag == 0) {
      if (count != 0) throw Error(Errc::MalformedHeader, "ABSENT variable list with nonzero count");
    } else if (tag != tag_variable) {
      throw Error(Errc::MalformedHeader, "expected NC_VARIABLE tag");
    }
    for (std::uint32_t i = 0; i < count && tag != 0; ++i) {
      Variable v;
      v.name = in.name();
      auto rank = in.get<std::uint32_t>();
      if (rank > max_rank)
        throw Error(Errc::MalformedHeader, "variable '" + v.name + "' has rank " + std::to_string(rank) +
                                               ", at most " + std::to_string(max_rank) + " is supported");
      for (std::uint32_t k = 0; k < rank; ++k) {
        auto id = in.get<std::uint32_t>();
        if (id >= ds.dims.size()) throw Error(Errc::MalformedHeader, "dimension id out of range in '" + v.name + "'");
        if (k > 0 && ds.dims[id].is_record())
          throw Error(Errc::MalformedHeader, "record dimension not first in '" + v.name + "'");
        v.dims.push_back(id);
      }
      v.attrs = read_attributes(in);
      v.data = make_array(read_type(in));
      in.get<std::uint32_t>();  // vsize: recomputed from the shape
      begins.push_back(ds.format == Format::Offset64 ? in.get<std::uint64_t>() : in.get<std::uint32_t>());
      if (ds.find_var(v.name)) throw Error(Errc::MalformedHeader, "duplicate variable '" + v.name + "'");
      ds.vars.push_back(std::move(v));
    }
  }

  // Record stride as the NetCDF library computes it.
  std::uint64_t record_size = 0;
  std::size_t record_vars = 0;
  std::uint64_t lone_bytes = 0;
  std::uint64_t first_record_begin = std::numeric_limits<std::uint64_t>::max();
  for (std::size_t i = 0; i < ds.vars.size(); ++i) {
    const auto& v = ds.vars[i];
    if (!ds.is_record_var(v)) continue;
    std::uint64_t n = type_size(v.type());
    for (std::size_t k = 1; k < v.dims.size(); ++k) n *= ds.dims[v.dims[k]].length;
    record_size += pad4(n);
    lone_bytes = n;
    ++record_vars;
    first_record_begin = std::min(first_record_begin, begins[i]);
  }
  if (record_vars == 1) record_size = lone_bytes;

  if (numrecs == streaming) {
    ds.record_count = (record_size == 0 || first_record_begin > bytes.size())
                          ? 0
                          : static_cast<std::size_t>((bytes.size() - first_record_begin) / record_size);
  } else {
    ds.record_count = numrecs;
  }

  for (std::size_t i = 0; i < ds.vars.size(); ++i) {
    auto& v = ds.vars[i];
    const bool record = ds.is_record_var(v);
    std::uint64_t per = 1;
    for (std::size_t k = record ? 1 : 0; k < v.dims.size(); ++k) per *= ds.dims[v.dims[k]].length;
    const std::uint64_t chunk = per * type_size(v.type());
    const std::uint64_t records = record ? ds.record_count : 1;
    const std::uint64_t stride = record ? record_size : 0;
    if (records > 0) {
      const std::uint64_t last_end = begins[i] + (records - 1) * stride + chunk;
      if (begins[i] > bytes.size() || last_end > bytes.size() || last_end < begins[i])
        throw Error(Errc::TruncatedFile, "data of '" + v.name + "' extends past end of file");
    }
    std::visit(
        [&](auto& out) {
          for (std::uint64_t r = 0; r < records; ++r)
            decode_into(out, bytes.data() + begins[i] + r * stride, static_cast<std::size_t>(per));
        },
        v.data);
  }
  return ds;
}

/// Copies the row-major hyperslab [start, start+count) of a variable.
inline Array read_slab(const Dataset& ds, std::string_view var, std::span<const std::size_t> start,
                       std::span<const std::size_t> count) {
  const Variable* v = ds.find_var(var);
  if (!v) throw Error(Errc::NoSuchVariable, std::string(var));
  const auto shape = ds.shape(*v);
  if (start.size() != shape.size() || count.size() != shape.size())
    throw Error(Errc::RankMismatch, "variable '" + v->name + "' has rank " + std::to_string(shape.size()));
  std::size_t total = 1;
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (start[k] > shape[k] || count[k] > shape[k] - start[k])
      throw Error(Errc::OutOfBounds, "axis " + std::to_string(k) + " of '" + v->name + "'");
    total *= count[k];
  }

  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t k = shape.size(); k-- > 1;) strides[k - 1] = strides[k] * shape[k];

  return std::visit(
      [&](const auto& src) -> Array {
        std::decay_t<decltype(src)> dst;
        dst.reserve(total);
        if (total == 0) return dst;
        std::vector<std::size_t> idx(shape.size(), 0);
        for (std::size_t n = 0; n < total; ++n) {
          std::size_t offset = 0;
          for (std::size_t k = 0; k < shape.size(); ++k) offset += (start[k] + idx[k]) * strides[k];
          dst.push_back(src[offset]);
          for (std::size_t k = shape.size(); k-- > 0;) {
            if (++idx[k] < count[k]) break;
            idx[k] = 0;
          }
        }
        return dst;
      },
      v->data);
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::Io, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

inline Dataset read_file(const std::filesystem::path& path) { return parse(read_bytes(path)); }

/// Writes through a temporary file renamed into place, so a failure never
/// leaves a partial output behind.
inline void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(Errc::Io, "cannot create " + tmp.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) {
      f.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(Errc::Io, "short write to " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(Errc::Io, "cannot rename onto " + path.string());
  }
}

inline void write_file(const std::filesystem::path& path, const Dataset& ds) { write_bytes(path, write(ds)); }

}  // namespace etsf::nc
