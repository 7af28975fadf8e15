// Copyright 2026 The mcattn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <iosfwd>
#include <string>

#include "mcattn/attention.hpp"
#include "mcattn/matrix.hpp"

namespace mcattn {

/// Tensor record format (bit-exact round trips by construction):
///   bytes 0..7   magic "MCATTN01"
///   bytes 8..11  u32 little-endian header length H
///   bytes 12..   UTF-8 JSON header of length H:
///                {"dims": [rows, cols], "dtype": "f64", "order": "row-major"}
///   then         rows*cols IEEE-754 doubles, little-endian, row-major
/// A file may hold several consecutive records; an inputs bundle is three
/// records in Q, K, V order.
///
/// Read failures throw IoError carrying the byte offset (relative to the
/// record start) where parsing stopped making sense.

void write_tensor(std::ostream& out, const RealMatrix& matrix);
RealMatrix read_tensor(std::istream& in);

void write_tensor_file(const std::string& path, const RealMatrix& matrix);
RealMatrix read_tensor_file(const std::string& path);

/// Writes/reads a Q, K, V bundle. The prescaled flag is recorded in the Q
/// header as "prescaled": true/false.
void write_inputs_bundle(const std::string& path, const AttentionInputs& inputs);
AttentionInputs read_inputs_bundle(const std::string& path);

}  // namespace mcattn
