#pragma once

#include <Eigen/Dense>
#include <string>

#include "hst/errors.hpp"

namespace hst {

/// Sample dump: one row per point, d columns, header "x0,...,x{d-1}".
/// Values are written with round-trip precision.
void write_samples_csv(const std::string& path, const Eigen::MatrixXd& samples);
Eigen::MatrixXd read_samples_csv(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace hst
