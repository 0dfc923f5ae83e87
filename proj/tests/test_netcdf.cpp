#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "etsf/netcdf.hpp"
#include "support/errors.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace etsf;
using nc::Dataset;

namespace {

std::vector<std::uint8_t> be32(std::uint32_t v) {
  return {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 8),
          static_cast<std::uint8_t>(v)};
}

void append(std::vector<std::uint8_t>& out, const std::vector<std::uint8_t>& more) {
  out.insert(out.end(), more.begin(), more.end());
}

void append_name(std::vector<std::uint8_t>& out, const std::string& s) {
  append(out, be32(static_cast<std::uint32_t>(s.size())));
  out.insert(out.end(), s.begin(), s.end());
  while (out.size() % 4) out.push_back(0);
}

/// One dimension `number_of_atoms` = 2 and a double variable `x` over it
/// holding [1.0, 8.0], assembled byte by byte from the format grammar.
std::vector<std::uint8_t> handmade_file() {
  std::vector<std::uint8_t> b{'C', 'D', 'F', 1};
  append(b, be32(0));
  append(b, be32(0x0A));
  append(b, be32(1));
  append_name(b, "number_of_atoms");
  append(b, be32(2));
  append(b, be32(0));
  append(b, be32(0));
  append(b, be32(0x0B));
  append(b, be32(1));
  append_name(b, "x");
  append(b, be32(1));
  append(b, be32(0));
  append(b, be32(0));
  append(b, be32(0));
  append(b, be32(6));
  append(b, be32(16));
  const auto begin = static_cast<std::uint32_t>(b.size() + 4);
  append(b, be32(begin));
  append(b, {0x3F, 0xF0, 0, 0, 0, 0, 0, 0});
  append(b, {0x40, 0x20, 0, 0, 0, 0, 0, 0});
  return b;
}

}  // namespace

TEST(Codec, EmptyDatasetIsTheMinimalHeader) {
  const auto bytes = nc::write(Dataset{});
  const std::vector<std::uint8_t> expected{'C', 'D', 'F', 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
                                           0,   0,   0,   0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(bytes, expected);
  const auto ds = nc::parse(bytes);
  EXPECT_TRUE(ds.dims.empty());
  EXPECT_TRUE(ds.attrs.empty());
  EXPECT_TRUE(ds.vars.empty());
}

TEST(Codec, HandmadeFileParses) {
  const auto bytes = handmade_file();
  const auto ds = nc::parse(bytes);
  ASSERT_EQ(ds.dims.size(), 1u);
  EXPECT_EQ(ds.dims[0].name, "number_of_atoms");
  EXPECT_EQ(ds.dims[0].length, 2u);
  ASSERT_EQ(ds.vars.size(), 1u);
  EXPECT_EQ(ds.vars[0].name, "x");
  EXPECT_EQ(std::get<std::vector<double>>(ds.vars[0].data), (std::vector<double>{1.0, 8.0}));
  EXPECT_EQ(nc::write(ds), bytes);
}

TEST(Codec, BigEndianDouble) {
  auto bytes = handmade_file();
  const std::vector<std::uint8_t> pi{0x40, 0x09, 0x21, 0xFB, 0x54, 0x44, 0x2D, 0x18};
  std::copy(pi.begin(), pi.end(), bytes.end() - 16);
  const auto ds = nc::parse(bytes);
  EXPECT_EQ(std::get<std::vector<double>>(ds.vars[0].data)[0], 3.141592653589793);
}

TEST(Codec, RejectsForeignAndDamagedInput) {
  std::vector<std::uint8_t> v3{'C', 'D', 'F', 3, 0, 0, 0, 0};
  EXPECT_EQ(code_of([&] { nc::parse(v3); }), Errc::UnsupportedVariant);
  std::vector<std::uint8_t> junk{'X', 'Y', 'Z', 1, 0, 0, 0, 0};
  EXPECT_EQ(code_of([&] { nc::parse(junk); }), Errc::BadMagic);
  std::vector<std::uint8_t> hdf5{0x89, 'H', 'D', 'F', '\r', '\n', 0x1A, '\n'};
  EXPECT_EQ(code_of([&] { nc::parse(hdf5); }), Errc::Hdf5Container);

  auto bytes = handmade_file();
  bytes.resize(bytes.size() - 3);
  EXPECT_EQ(code_of([&] { nc::parse(bytes); }), Errc::TruncatedFile);

  auto bad_tag = handmade_file();
  bad_tag[11] = 0x0D;
  EXPECT_EQ(code_of([&] { nc::parse(bad_tag); }), Errc::MalformedHeader);
}

TEST(Codec, NameClash) {
  Dataset ds;
  ds.add_dim("n", 1);
  ds.add_var("x", {"n"}, std::vector<double>{1.0});
  ds.add_var("x", {"n"}, std::vector<double>{2.0});
  EXPECT_EQ(code_of([&] { nc::write(ds); }), Errc::NameClash);
}

TEST(Codec, PayloadMustMatchShape) {
  Dataset ds;
  ds.add_dim("n", 3);
  ds.add_var("x", {"n"}, std::vector<double>{1.0});
  EXPECT_EQ(code_of([&] { nc::write(ds); }), Errc::InvalidDataset);
}

TEST(Codec, OffsetOverflowInClassicOnly) {
  Dataset ds;
  ds.add_dim("big", 300'000'000);
  ds.add_var("a", {"big"}, std::vector<double>{});
  ds.add_var("b", {"big"}, std::vector<double>{});
  EXPECT_EQ(code_of([&] { nc::plan_layout(ds); }), Errc::OffsetOverflow);
  ds.format = nc::Format::Offset64;
  EXPECT_NO_THROW(nc::plan_layout(ds));
}

TEST(Codec, RecordVariables) {
  Dataset ds;
  ds.add_dim("time", 0);
  ds.add_dim("n", 3);
  ds.record_count = 2;
  ds.add_var("stamp", {"time"}, std::vector<std::int16_t>{7, 9});
  ds.add_var("field", {"time", "n"}, std::vector<float>{1, 2, 3, 4, 5, 6});
  const auto bytes = nc::write(ds);
  EXPECT_TRUE(oracles::audit(bytes).ok());
  EXPECT_EQ(nc::parse(bytes), ds);

  Dataset lone;
  lone.add_dim("time", 0);
  lone.record_count = 3;
  lone.add_var("flags", {"time"}, std::vector<std::int8_t>{1, 2, 3});
  const auto lone_bytes = nc::write(lone);
  const auto audit = oracles::audit(lone_bytes);
  EXPECT_TRUE(audit.ok()) << (audit.problems.empty() ? "" : audit.problems.front());
  EXPECT_EQ(nc::parse(lone_bytes), lone);
}

TEST(Codec, StreamingRecordCount) {
  Dataset ds;
  ds.add_dim("time", 0);
  ds.record_count = 2;
  ds.add_var("a", {"time"}, std::vector<std::int32_t>{4, 5});
  auto bytes = nc::write(ds);
  for (int i = 4; i < 8; ++i) bytes[i] = 0xFF;
  EXPECT_EQ(nc::parse(bytes).record_count, 2u);
}

TEST(Codec, CharAttributesLosePaddingOnRead) {
  Dataset ds;
  ds.attrs.push_back({"title", std::string("silicon  \0\0", 11)});
  const auto back = nc::parse(nc::write(ds));
  EXPECT_EQ(std::get<std::string>(back.attrs[0].value), "silicon");
}

TEST(Codec, GoldenFixtureIsCanonical) {
  const auto ds = fixtures::silicon_crystal();
  const auto bytes = nc::write(ds);
  const auto audit = oracles::audit(bytes);
  EXPECT_TRUE(audit.ok());
  EXPECT_EQ(audit.vars.size(), ds.vars.size());
  EXPECT_EQ(nc::write(nc::parse(bytes)), bytes);
  EXPECT_EQ(nc::read_bytes(std::string(ETSF_FIXTURE_DIR) + "/si-etsf.nc"), bytes);
}

TEST(Codec, ReferenceFixtureFromIndependentWriter) {
  const auto bytes = nc::read_bytes(std::string(ETSF_FIXTURE_DIR) + "/si_reference.nc");
  const auto ds = nc::parse(bytes);
  auto expected = fixtures::silicon_crystal();
  expected.add_dim("symbol_length", 2);
  expected.add_var("chemical_symbols", {"number_of_atom_species", "symbol_length"}, std::string("Si"));
  // The reference writer orders dimensions as declared in the generator.
  std::vector<std::string> dims;
  for (const auto& d : ds.dims) dims.push_back(d.name);
  EXPECT_EQ(dims, (std::vector<std::string>{"number_of_cartesian_directions", "number_of_vectors",
                                            "number_of_reduced_dimensions", "number_of_atoms",
                                            "number_of_atom_species", "number_of_symmetry_operations",
                                            "symbol_length"}));
  EXPECT_EQ(ds.attrs, expected.attrs);
  ASSERT_EQ(ds.vars.size(), expected.vars.size());
  for (const auto& v : expected.vars) {
    const auto* got = ds.find_var(v.name);
    ASSERT_NE(got, nullptr) << v.name;
    EXPECT_EQ(got->data, v.data) << v.name;
    EXPECT_EQ(got->attrs, v.attrs) << v.name;
    EXPECT_EQ(ds.dim_names(*got), expected.dim_names(v)) << v.name;
  }
  EXPECT_EQ(nc::write(ds), bytes);
}

TEST(Codec, RandomRoundTrip) {
  std::mt19937_64 rng(20240611);
  for (int i = 0; i < 300; ++i) {
    const auto format = i % 2 ? nc::Format::Offset64 : nc::Format::Classic;
    const auto ds = oracles::random_dataset(rng, static_cast<std::size_t>(i % 9), format);
    const auto bytes = nc::write(ds);
    ASSERT_TRUE(oracles::audit(bytes).ok()) << "dataset " << i;
    const auto back = nc::parse(bytes);
    ASSERT_EQ(back, ds) << "dataset " << i;
    ASSERT_EQ(nc::write(back), bytes) << "dataset " << i;
  }
}

TEST(Slab, RowSelection) {
  Dataset ds;
  ds.add_dim("r", 2);
  ds.add_dim("c", 3);
  ds.add_var("m", {"r", "c"}, std::vector<std::int32_t>{1, 2, 3, 4, 5, 6});
  const std::vector<std::size_t> start{1, 0}, count{1, 3};
  EXPECT_EQ(std::get<std::vector<std::int32_t>>(nc::read_slab(ds, "m", start, count)),
            (std::vector<std::int32_t>{4, 5, 6}));
  const std::vector<std::size_t> zero{0, 0}, full{2, 3};
  EXPECT_EQ(nc::read_slab(ds, "m", zero, full), ds.vars[0].data);
}

TEST(Slab, Errors) {
  Dataset ds;
  ds.add_dim("r", 2);
  ds.add_var("v", {"r"}, std::vector<double>{1, 2});
  const std::vector<std::size_t> s1{1}, c2{2}, s2{0, 0};
  EXPECT_EQ(code_of([&] { nc::read_slab(ds, "w", s1, s1); }), Errc::NoSuchVariable);
  EXPECT_EQ(code_of([&] { nc::read_slab(ds, "v", s1, c2); }), Errc::OutOfBounds);
  EXPECT_EQ(code_of([&] { nc::read_slab(ds, "v", s2, s2); }), Errc::RankMismatch);
}

TEST(Slab, AgreesWithFullReadIndexing) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const auto ds = oracles::random_dataset(rng, static_cast<std::size_t>(1 + trial % 6), nc::Format::Classic);
    for (const auto& v : ds.vars) {
      const auto shape = ds.shape(v);
      std::vector<std::size_t> start(shape.size()), count(shape.size());
      for (std::size_t a = 0; a < shape.size(); ++a) {
        start[a] = shape[a] ? std::uniform_int_distribution<std::size_t>(0, shape[a] - 1)(rng) : 0;
        count[a] = shape[a] ? std::uniform_int_distribution<std::size_t>(0, shape[a] - start[a])(rng) : 0;
      }
      const auto slab = nc::read_slab(ds, v.name, start, count);
      // Oracle: walk every element of the slab and index the full payload.
      std::size_t total = 1;
      for (auto c : count) total *= c;
      ASSERT_EQ(nc::size_of(slab), total);
      std::vector<std::size_t> idx(shape.size(), 0);
      for (std::size_t n = 0; n < total; ++n) {
        std::size_t rem = n, flat = 0;
        for (std::size_t a = shape.size(); a-- > 0;) {
          idx[a] = rem % count[a];
          rem /= count[a];
        }
        for (std::size_t a = 0; a < shape.size(); ++a) flat = flat * shape[a] + start[a] + idx[a];
        std::visit(
            [&](const auto& full) {
              using V = std::decay_t<decltype(full)>;
              ASSERT_EQ(std::get<V>(slab)[n], full[flat]);
            },
            v.data);
      }
    }
  }
}

TEST(Files, AtomicWrite) {
  const auto dir = std::filesystem::temp_directory_path() / "etsf-netcdf-test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "si-etsf.nc").string();
  nc::write_file(path, fixtures::silicon_crystal());
  EXPECT_EQ(nc::read_file(path), fixtures::silicon_crystal());
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    EXPECT_EQ(entry.path().filename().string().find(".tmp"), std::string::npos);
  EXPECT_EQ(code_of([&] { nc::read_file((dir / "missing.nc").string()); }), Errc::Io);
  std::filesystem::remove_all(dir);
}
