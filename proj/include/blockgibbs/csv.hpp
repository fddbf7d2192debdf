#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "blockgibbs/model.hpp"

namespace blockgibbs {

/// Shortest decimal representation that round-trips the exact double.
std::string format_double(double value);

/// Loads a dataset from CSV: one observation per row, D numeric columns,
/// optional header row (detected by non-numeric first row).
Dataset load_dataset_csv(const std::string& path);

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);

/// Label files: one integer per line, 1-based component labels (0 marks
/// "no component", used for planted outliers).
void write_labels(const std::string& path, const std::vector<int>& zero_based_labels);
std::vector<int> load_labels(const std::string& path);  // back to 0-based, -1 for none

}  // namespace blockgibbs
