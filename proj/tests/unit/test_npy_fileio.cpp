#include <gtest/gtest.h>

#include <cstring>

#include "fixtures.hpp"
#include "sbhd/errors.hpp"
#include "sbhd/fileio.hpp"
#include "sbhd/npy.hpp"

using namespace sbhd;

namespace {

std::vector<std::byte> bytes_of(const std::string& s) {
  std::vector<std::byte> out(s.size());
  std::memcpy(out.data(), s.data(), s.size());
  return out;
}

}  // namespace

TEST(Npy, HeaderIsVersion1AndPaddedTo64Bytes) {
  const std::vector<float> v = {1.0f, 2.0f, 3.0f, 4.0f, 5.0f, 6.0f};
  const std::string enc = npy::encode(npy::make_float32({2, 3}, v));
  ASSERT_GE(enc.size(), 10u);
  EXPECT_EQ(enc.substr(0, 6), "\x93NUMPY");
  EXPECT_EQ(enc[6], '\x01');
  EXPECT_EQ(enc[7], '\x00');
  const auto header_len = static_cast<unsigned char>(enc[8]) | (static_cast<unsigned char>(enc[9]) << 8);
  EXPECT_EQ((10 + header_len) % 64, 0u);
  EXPECT_EQ(enc[9 + header_len], '\n');
  EXPECT_NE(enc.find("'descr': '<f4'"), std::string::npos);
  EXPECT_NE(enc.find("'fortran_order': False"), std::string::npos);
  EXPECT_NE(enc.find("'shape': (2, 3)"), std::string::npos);
  EXPECT_EQ(enc.size(), 10 + header_len + v.size() * 4);
}

TEST(Npy, RoundTripsEveryDtypeAndShape) {
  const std::vector<float> f = {0.5f, -1.25f, 3e-8f, 7.0f};
  const std::vector<double> d = {0.1, -2.5e300, 3.0};
  const std::vector<std::uint8_t> u = {0, 1, 255, 2, 9, 8};

  auto a = npy::decode(bytes_of(npy::encode(npy::make_float32({1, 2, 1, 2}, f))));
  EXPECT_EQ(a.dtype, npy::DType::kFloat32);
  EXPECT_EQ(a.shape, (std::vector<std::size_t>{1, 2, 1, 2}));
  EXPECT_EQ(a.as_float32(), f);

  a = npy::decode(bytes_of(npy::encode(npy::make_float64({3}, d))));
  EXPECT_EQ(a.shape, (std::vector<std::size_t>{3}));
  EXPECT_EQ(a.as_float64(), d);

  a = npy::decode(bytes_of(npy::encode(npy::make_uint8({2, 3}, u))));
  EXPECT_EQ(a.as_uint8(), u);
}

TEST(Npy, RejectsMalformedInput) {
  EXPECT_THROW(npy::decode(bytes_of("not an npy file at all")), StructuralError);
  std::string enc = npy::encode(npy::make_uint8({4}, std::vector<std::uint8_t>{1, 2, 3, 4}));
  EXPECT_THROW(npy::decode(bytes_of(enc.substr(0, enc.size() - 1))), StructuralError);
  std::string fortran = enc;
  const auto pos = fortran.find("False");
  fortran.replace(pos, 5, "True ");
  EXPECT_THROW(npy::decode(bytes_of(fortran)), StructuralError);
  std::string wrong = enc;
  wrong.replace(wrong.find("|u1"), 3, "<i8");
  EXPECT_THROW(npy::decode(bytes_of(wrong)), StructuralError);
  EXPECT_THROW(npy::make_float32({2, 2}, std::vector<float>{1.0f}), StructuralError);
}

TEST(Npy, GridHelpersNarrowDoublesToFloat32) {
  const auto dir = fixtures::temp_dir("npy_grid");
  Grid<double> g(2, 2, std::vector<double>{0.1, 0.2, 0.3, 1.0 / 3.0});
  npy::write_float32(dir / "g.npy", g);
  const Grid<double> back = npy::read_float_grid(dir / "g.npy");
  ASSERT_TRUE(back.same_shape(g));
  for (std::size_t i = 0; i < g.size(); ++i)
    EXPECT_EQ(back.values()[i], static_cast<double>(static_cast<float>(g.values()[i])));
  EXPECT_THROW(npy::read_uint8_grid(dir / "g.npy"), StructuralError);
}

TEST(FileIo, AtomicWriteLeavesNoTemporaries) {
  const auto dir = fixtures::temp_dir("atomic");
  write_file_atomic(dir / "nested" / "out.txt", "first");
  write_file_atomic(dir / "nested" / "out.txt", "second");
  EXPECT_EQ(read_file(dir / "nested" / "out.txt"), "second");
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "nested")) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1u);
}

TEST(FileIo, ErrorsMapToExitCodes) {
  try {
    read_file("/nonexistent/definitely/missing");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_EQ(exit_code(e), ExitCode::kIo);
  }
  const auto dir = fixtures::temp_dir("badjson");
  write_file_atomic(dir / "bad.json", "{ not json");
  try {
    read_json(dir / "bad.json");
    FAIL();
  } catch (const StructuralError& e) {
    EXPECT_EQ(exit_code(e), ExitCode::kBadInput);
  }
  EXPECT_EQ(exit_code(DomainError("x")), ExitCode::kDomain);
}

TEST(FileIo, Sha256MatchesKnownDigest) {
  const auto dir = fixtures::temp_dir("sha");
  write_file_atomic(dir / "abc", "abc");
  EXPECT_EQ(sha256_file(dir / "abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
