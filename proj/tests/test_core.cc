#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mfg/core.h"

namespace mfg {
namespace {

TEST(StepSize, ConstantIgnoresTime) {
  EXPECT_DOUBLE_EQ(step_size(StepSizeSchedule::Constant(1e-3), 999), 1e-3);
}

TEST(StepSize, LinearDecay) {
  const auto s = StepSizeSchedule::LinearDecay(0.5, 1.0);
  EXPECT_DOUBLE_EQ(step_size(s, 0), 0.5);
  EXPECT_DOUBLE_EQ(step_size(s, 9), 0.05);
}

TEST(StepSize, OutOfRangeValueThrows) {
  EXPECT_THROW(step_size(StepSizeSchedule::Constant(1.0), 0), NumericError);
  EXPECT_THROW(step_size(StepSizeSchedule::Constant(0.0), 3), NumericError);
  EXPECT_THROW(step_size(StepSizeSchedule::Constant(0.1), -1), ConfigError);
  EXPECT_THROW(StepSizeSchedule::LinearDecay(0.5, -1.0), ConfigError);
}

TEST(ValidateParameter, Examples) {
  const double radius = 1.0;
  EXPECT_TRUE(validate_parameter({Vector(4, 0.0), Vector(4, 0.25)}, radius));
  EXPECT_FALSE(validate_parameter({Vector(2, 0.0), {0.5, 0.6}}, radius));
  EXPECT_FALSE(validate_parameter({{2.0, 0.0}, {1.0}}, radius));
  EXPECT_FALSE(validate_parameter({{0.0}, {1.2, -0.2}}, radius));
  EXPECT_TRUE(validate_parameter({{0.6, 0.8}, {1.0}}, radius));
}

TEST(Simplex, OnSimplexTolerance) {
  EXPECT_TRUE(on_simplex(Vector{0.5, 0.5 + 5e-13}));
  EXPECT_FALSE(on_simplex(Vector{0.5, 0.5 + 5e-12}));
  EXPECT_FALSE(on_simplex(Vector{1.5, -0.5}));
  EXPECT_FALSE(on_simplex(Vector{std::nan(""), 1.0}));
}

TEST(ActionSpace, MaskValidation) {
  EXPECT_THROW(ActionSpace(2, {{0}, {}}), ConfigError);
  EXPECT_THROW(ActionSpace(2, {{0, 2}}), ConfigError);
  EXPECT_THROW(ActionSpace(3, {{1, 0}}), ConfigError);
  const ActionSpace a(3, {{0, 2}, {1}});
  EXPECT_FALSE(a.all_feasible());
  EXPECT_TRUE(a.is_feasible(0, 2));
  EXPECT_FALSE(a.is_feasible(0, 1));
  EXPECT_FALSE(a.is_feasible(1, 0));
  EXPECT_TRUE(ActionSpace(3, 4).all_feasible());
}

TEST(StateSpace, Grid) {
  const auto g = StateSpace::IntervalGrid(50, true);
  EXPECT_DOUBLE_EQ(g.cell_width(), 0.02);
  EXPECT_DOUBLE_EQ(g.coordinate(10), 0.2);
  EXPECT_THROW(StateSpace::IntervalGrid(0, true), ConfigError);
  EXPECT_FALSE(StateSpace::GraphEdges(5).is_grid());
}

TEST(Algorithm, RoundTrip) {
  for (Algorithm a : {Algorithm::kSemiSgd, Algorithm::kFpiVanilla,
                      Algorithm::kFpiFp, Algorithm::kFpiMd, Algorithm::kFpiEr}) {
    EXPECT_EQ(parse_algorithm(to_string(a)), a);
  }
  EXPECT_THROW(parse_algorithm("sgd"), ConfigError);
}

TEST(RunConfig, Validation) {
  RunConfig c;
  EXPECT_NO_THROW(validate_config(c));
  c.total_steps = -1;
  EXPECT_THROW(validate_config(c), ConfigError);
  c = RunConfig{};
  c.algorithm = Algorithm::kFpiVanilla;
  c.inner_loop = c.total_steps + 1;
  EXPECT_THROW(validate_config(c), ConfigError);
  c.inner_loop = 0;
  EXPECT_THROW(validate_config(c), ConfigError);
  c = RunConfig{};
  c.step_size = StepSizeSchedule::Constant(1.5);
  EXPECT_THROW(validate_config(c), ConfigError);
  c = RunConfig{};
  c.inverse_temperature = 0.0;
  EXPECT_THROW(validate_config(c), ConfigError);
}

TEST(Rng, ReproducibleAndInRange) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
    if (x != c.uniform()) differs = true;
    const int k = a.uniform_int(7);
    b.uniform_int(7);
    c.uniform_int(7);
    EXPECT_GE(k, 0);
    EXPECT_LT(k, 7);
  }
  EXPECT_TRUE(differs);
  EXPECT_EQ(a, b);
}

TEST(Norms, Basics) {
  EXPECT_DOUBLE_EQ(l2_norm(Vector{3.0, 4.0}), 5.0);
  EXPECT_TRUE(all_finite(Vector{1.0, -2.0}));
  EXPECT_FALSE(all_finite(Vector{1.0, std::numeric_limits<double>::infinity()}));
}

}  // namespace
}  // namespace mfg
