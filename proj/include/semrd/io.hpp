#pragma once

// File formats and name lookups used by the command-line front end.
//
//   source:  {"joint": [[...], ...], "s_labels": [...], "x_labels": [...]}
//            rows are s, columns are x
//   channel: {"rows": [[...], ...]}   rows are x, columns are y
//   matrix:  plain CSV of numbers, one row per line

#include <string>
#include <string_view>
#include <vector>

#include "semrd/distortion.hpp"
#include "semrd/probcore.hpp"

namespace semrd {

JointSource parse_source(std::string_view json_text);
JointSource load_source(const std::string& path);

Channel parse_channel(std::string_view json_text);
Channel load_channel(const std::string& path);

Matrix<double> parse_csv_matrix(std::string_view text);
Matrix<double> load_csv_matrix(const std::string& path);

/// "tv", "kl", "chi2", or "matrix:<path>". The matrix form reads a two-column
/// CSV of generator samples (t, f(t)) for a generic f-divergence.
SemanticMeasure semantic_from_name(const std::string& name);

/// "hamming", "mse", or "matrix:<path>" (|X| x |Y| cost CSV). For "mse" the
/// source's x_labels are used as values when all of them parse as numbers;
/// reconstruction symbols share those values when |Y| = |X|.
ObservationMeasure observation_from_name(const std::string& name,
                                         const JointSource& source, Index output_size);

/// "a:b:n" -> n evenly spaced points from a to b inclusive (n = 1 gives a).
std::vector<double> parse_grid(const std::string& spec);

/// Numeric value of every label, or empty when any label is not a number.
std::vector<double> numeric_labels(const std::vector<std::string>& labels);

}  // namespace semrd
