#include <gtest/gtest.h>

#include <sstream>

#include "stickysim/config.hpp"

using namespace stickysim;

TEST(ParseConfig, SectionsAndOverlay) {
  std::istringstream in(
      "# comment\n"
      "n = 100\n"
      "seed_note = x  # trailing\n"
      "[fig-pull]\n"
      "n = 50\n"
      "l = 140\n"
      "[defaults]\n"
      "beta = 2\n");
  const auto cfg = parse_config(in);
  const auto pull = cfg.for_experiment("fig-pull");
  EXPECT_EQ(pull.at("n"), "50");
  EXPECT_EQ(pull.at("l"), "140");
  EXPECT_EQ(pull.at("beta"), "2");
  EXPECT_EQ(pull.at("seed_note"), "x");
  EXPECT_EQ(cfg.for_experiment("other").at("n"), "100");
  EXPECT_EQ(cfg.for_experiment("other").count("l"), 0u);
}

TEST(ParseConfig, ErrorsCarryLineNumbers) {
  std::istringstream bad("n = 1\nnot a pair\n");
  try {
    parse_config(bad);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream unterminated("[oops\n");
  EXPECT_THROW(parse_config(unterminated), ValidationError);
  EXPECT_THROW(load_config("/nonexistent/file.cfg"), ValidationError);
}

TEST(ApplyOverride, Parses) {
  ParamMap m;
  apply_override(m, "h = 170");
  EXPECT_EQ(m.at("h"), "170");
  apply_override(m, "h=inf");
  EXPECT_EQ(m.at("h"), "inf");
  EXPECT_THROW(apply_override(m, "novalue"), ValidationError);
  EXPECT_THROW(apply_override(m, "=3"), ValidationError);
}

TEST(ParamReader, TypedAccess) {
  ParamReader r({{"a", "1.5"}, {"b", "7"}, {"c", "yes"}, {"h", "inf"}, {"k", "160"},
                 {"list", "1,3:7:2,10"}, {"m", "2n,5n,40"}, {"x", "1, 2.5"}});
  EXPECT_DOUBLE_EQ(r.get_double("a", 0), 1.5);
  EXPECT_EQ(r.get_int("b", 0), 7);
  EXPECT_TRUE(r.get_bool("c", false));
  EXPECT_FALSE(r.get_threshold("h", Threshold::finite(1)).is_finite());
  EXPECT_EQ(r.get_threshold("k", Threshold::infinite()).value(), 160);
  EXPECT_EQ(r.get_int_list("list", {}), (std::vector<int>{1, 3, 5, 7, 10}));
  EXPECT_EQ(r.get_count_list("m", 500, {}), (std::vector<std::size_t>{1000, 2500, 40}));
  EXPECT_EQ(r.get_double_list("x", {}), (std::vector<double>{1.0, 2.5}));
  EXPECT_EQ(r.get_int("missing", 42), 42);
  EXPECT_NO_THROW(r.finish());
}

TEST(ParamReader, RejectsBadValuesAndLeftovers) {
  ParamReader r({{"n", "12x"}, {"flag", "maybe"}, {"typo", "1"}});
  EXPECT_THROW(r.get_int("n", 0), ValidationError);
  EXPECT_THROW(r.get_bool("flag", false), ValidationError);
  EXPECT_THROW(r.finish(), ValidationError);
  EXPECT_THROW(parse_int_list("5:3"), ValidationError);
  EXPECT_THROW(parse_int_list(""), ValidationError);
}
