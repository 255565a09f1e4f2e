#include <gtest/gtest.h>

#include "cbvcc/config.hpp"
#include "cbvcc/seed.hpp"
#include "test_util.hpp"

using namespace cbvcc;

TEST(Seed, ReferenceValues) {
  // Published reference outputs for splitmix64 (state 0) and 64-bit FNV-1a.
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Seed, DerivationSeparatesKeysAndSeeds) {
  EXPECT_EQ(derive_seed(3, "p1"), derive_seed(3, "p1"));
  EXPECT_NE(derive_seed(3, "p1"), derive_seed(3, "p2"));
  EXPECT_NE(derive_seed(3, "p1"), derive_seed(4, "p1"));
  EXPECT_NE(derive_seed(3, std::uint64_t{0}), derive_seed(3, std::uint64_t{1}));
}

TEST(Config, ParsesTablesAndTypes) {
  const auto c = config::Config::parse(
      "seed = 42  # global\n"
      "[paths]\nmanifest = \"data/m.csv\"\nout = 'out#1'\n"
      "[model]\nc_reg = 2.5e2\nstandardize = true\n"
      "[linking]\nmemory = +30\nsearch_range = 1_0\n");
  EXPECT_EQ(c.get_int("seed"), 42);
  EXPECT_EQ(c.get_string("paths.manifest"), "data/m.csv");
  EXPECT_EQ(c.get_string("paths.out"), "out#1");
  EXPECT_EQ(c.get_double("model.c_reg"), 250.0);
  EXPECT_EQ(c.get_bool("model.standardize"), true);
  EXPECT_EQ(c.get_int("linking.memory"), 30);
  EXPECT_EQ(c.get_double("linking.search_range"), 10.0);
  EXPECT_FALSE(c.get_int("cv.k"));
}

TEST(Config, ErrorsAreConfigKind) {
  auto kind = [](const std::string& text) {
    try {
      config::Config::parse(text);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::numeric;
  };
  EXPECT_EQ(kind("[paths\n"), ErrorKind::config);
  EXPECT_EQ(kind("novalue\n"), ErrorKind::config);
  EXPECT_EQ(kind("a = 1\na = 2\n"), ErrorKind::config);
  EXPECT_EQ(kind("a = [1, 2]\n"), ErrorKind::config);
  const auto c = config::Config::parse("a = \"x\"\n");
  EXPECT_THROW(c.get_double("a"), Error);
}
