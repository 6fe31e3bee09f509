// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoints. All integers are little-endian u64, all values raw
// IEEE-754 little-endian doubles, so a save/load round trip is bit-exact.
//
//   cell:  "SRNNGRU1" d m, then the nine blocks in GruParams::blocks() order,
//          each row-major
//   model: "SRNNCKP1" V e m n k T C, embedding (V x e), one cell record per
//          layer in layer order, head weight (C x m), head bias (C)
#pragma once

#include <filesystem>
#include <iosfwd>

#include "srnn/recurrent_cells.hpp"
#include "srnn/srnn_engine.hpp"

namespace srnn {

void write_gru_params(std::ostream& out, const GruParams& p);
GruParams read_gru_params(std::istream& in);

void write_model(std::ostream& out, const SrnnModel& model);
SrnnModel read_model(std::istream& in);

void save_model(const std::filesystem::path& path, const SrnnModel& model);
SrnnModel load_model(const std::filesystem::path& path);

}  // namespace srnn
