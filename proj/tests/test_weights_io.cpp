#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "narrow_node/experiments.hpp"
#include "narrow_node/weights_io.hpp"

namespace nn = narrow_node;

TEST(Weights, ParsesWellFormedFile) {
  const auto field = nn::parse_weights(R"({
    "dim": 2, "activation": "sigmoid",
    "layers": [
      {"A": [[1.0, -2.0], [3.0, 4.0]], "W": [[0.5, 0.0], [0.0, 0.5]], "b": [0.1, -0.1]},
      {"A": [[0, 0], [0, 1]], "W": [[1, 1], [1, 1]], "b": [0, 0]}
    ]})");
  EXPECT_EQ(field.dim(), 2);
  EXPECT_EQ(field.width(), 2u);
  EXPECT_EQ(field.activation().kind(), nn::ActivationKind::sigmoid);
  EXPECT_EQ(field.layer(0).A()(0, 1), -2.0);  // row-major
  EXPECT_EQ(field.layer(0).A()(1, 0), 3.0);
  EXPECT_EQ(field.layer(0).b()[1], -0.1);
}

TEST(Weights, JsonRoundTripPreservesField) {
  std::mt19937_64 rng(1);
  nn::RandomFieldOptions opt;
  opt.dim = 3;
  opt.width = 4;
  const auto field = nn::random_field(opt, rng);
  const auto back = nn::parse_weights(nn::field_to_json(field).dump());
  ASSERT_EQ(back.width(), field.width());
  EXPECT_EQ(back.activation(), field.activation());
  for (std::size_t i = 0; i < field.width(); ++i) {
    EXPECT_EQ(back.layer(i).A(), field.layer(i).A());
    EXPECT_EQ(back.layer(i).W(), field.layer(i).W());
    EXPECT_EQ(back.layer(i).b(), field.layer(i).b());
  }
}

TEST(Weights, RejectsMalformedDocuments) {
  const char* bad[] = {
      "not json",
      "[]",
      R"({"activation": "relu", "layers": []})",
      R"({"dim": 0, "activation": "relu", "layers": [{"A": [], "W": [], "b": []}]})",
      R"({"dim": 1.5, "activation": "relu", "layers": [{"A": [[1]], "W": [[1]], "b": [0]}]})",
      R"({"dim": 1, "activation": "swish", "layers": [{"A": [[1]], "W": [[1]], "b": [0]}]})",
      R"({"dim": 1, "activation": "relu", "layers": []})",
      R"({"dim": 2, "activation": "relu", "layers": [{"A": [[1, 0], [0]], "W": [[1, 0], [0, 1]], "b": [0, 0]}]})",
      R"({"dim": 2, "activation": "relu", "layers": [{"A": [[1, 0], [0, 1]], "W": [[1, 0], [0, 1]], "b": [0]}]})",
      R"({"dim": 2, "activation": "relu", "layers": [{"A": [[1, 0], [0, 1], [1, 1]], "W": [[1, 0], [0, 1]], "b": [0, 0]}]})",
      R"({"dim": 1, "activation": "relu", "layers": [{"A": [["x"]], "W": [[1]], "b": [0]}]})",
      R"({"dim": 1, "activation": "relu", "layers": [{"A": [[1]], "b": [0]}]})",
  };
  for (const char* text : bad) EXPECT_THROW(nn::parse_weights(text), nn::ParseError) << text;
}

TEST(Weights, LoadsFromDiskAndReportsMissingFiles) {
  const auto path = std::filesystem::temp_directory_path() / "narrow_node_weights_test.json";
  {
    std::ofstream out(path);
    out << R"({"dim": 1, "activation": "tanh", "layers": [{"A": [[2]], "W": [[0]], "b": [1]}]})";
  }
  EXPECT_EQ(nn::load_weights(path).layer(0).A()(0, 0), 2.0);
  std::filesystem::remove(path);
  EXPECT_THROW(nn::load_weights(path), nn::ParseError);
}
