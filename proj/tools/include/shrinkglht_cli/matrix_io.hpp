#pragma once

#include <filesystem>

#include "shrinkglht/glht.hpp"

namespace shrinkglht::cli {

/// Dense headerless CSV, one matrix row per line.
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);

}  // namespace shrinkglht::cli
