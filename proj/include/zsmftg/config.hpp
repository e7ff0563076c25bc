#pragma once

#include <cstdint>
#include <string>

#include "zsmftg/model.hpp"
#include "zsmftg/optimize.hpp"

namespace zsmftg {

struct OutputSpec {
    std::string dir = "out";
    bool csv = true;
    bool svg = true;
};

struct ExperimentConfig {
    ModelParams model;
    TrainSpec train;  // train.estimator holds the SimSpec section
    OutputSpec output;
    std::uint64_t seed = 0;
};

// Sectioned key-value text format:
//   [model] / [noise] / [train] / [estimator] / [output] / [run]
//   key = value, '#' comments, matrix literals as nested bracket lists.
// parse(serialize(cfg)) is the identity; numbers carry 17 significant
// digits.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

// Table-1 experiment of the accompanying study: scalar model, U([-1,1])
// initial laws, N(0, 0.01) step noise, GDA/AG hyperparameters.
ExperimentConfig preset_table1();

ExperimentConfig preset_by_name(const std::string& name);

// 17-significant-digit formatting used everywhere a number is serialized.
std::string format_double(double v);
std::string format_matrix(const MatrixXd& M);

}  // namespace zsmftg
