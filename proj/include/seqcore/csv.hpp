#pragma once

#include <string>

#include "seqcore/core.hpp"

namespace seqcore {

// Comma-separated numeric rows: features first, response last. Throws
// IngestionError (with the 1-based file row) on ragged rows, non-numeric
// cells, or a file without data rows.
Dataset load_csv(const std::string& path, bool has_header = false);

// Writes features then response per row with 17 significant digits.
void write_csv(const std::string& path, const Dataset& data, bool header = false);

}  // namespace seqcore
