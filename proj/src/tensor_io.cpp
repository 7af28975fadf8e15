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

#include "mcattn/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mcattn/errors.hpp"

namespace mcattn {
namespace {

constexpr char kMagic[8] = {'M', 'C', 'A', 'T', 'T', 'N', '0', '1'};

void put_u32_le(std::ostream& out, std::uint32_t v) {
  char buf[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                 static_cast<char>((v >> 16) & 0xFF),
                 static_cast<char>((v >> 24) & 0xFF)};
  out.write(buf, 4);
}

void put_f64_le(std::ostream& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(buf, 8);
}

std::uint32_t get_u32_le(const char* buf) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(buf[i]);
  return v;
}

double get_f64_le(const char* buf) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(buf[i]);
  return std::bit_cast<double>(bits);
}

nlohmann::json tensor_header(const RealMatrix& matrix) {
  return nlohmann::json{{"dims", {matrix.rows(), matrix.cols()}},
                        {"dtype", "f64"},
                        {"order", "row-major"}};
}

RealMatrix read_tensor_record(std::istream& in, nlohmann::json* header_out) {
  char magic[8];
  if (!in.read(magic, 8)) {
    throw IoError("tensor record: truncated before magic (byte offset 0)", 0);
  }
  if (std::memcmp(magic, kMagic, 8) != 0) {
    throw IoError("tensor record: bad magic, expected MCATTN01 (byte offset 0)", 0);
  }
  char len_buf[4];
  if (!in.read(len_buf, 4)) {
    throw IoError("tensor record: truncated header length (byte offset 8)", 8);
  }
  const std::uint32_t header_len = get_u32_le(len_buf);
  std::string header_text(header_len, '\0');
  if (!in.read(header_text.data(), header_len)) {
    throw IoError("tensor record: truncated JSON header (byte offset 12)", 12);
  }
  nlohmann::json header = nlohmann::json::parse(header_text, nullptr, false);
  if (header.is_discarded()) {
    throw IoError("tensor record: malformed JSON header (byte offset 12)", 12);
  }
  if (!header.contains("dims") || !header["dims"].is_array() ||
      header["dims"].size() != 2 || header.value("dtype", "") != "f64" ||
      header.value("order", "") != "row-major") {
    throw IoError("tensor record: header missing dims/dtype/order (byte offset 12)",
                  12);
  }
  if (!header["dims"][0].is_number_unsigned() ||
      !header["dims"][1].is_number_unsigned()) {
    throw IoError("tensor record: dims must be non-negative (byte offset 12)", 12);
  }
  const std::size_t rows = header["dims"][0].get<std::size_t>();
  const std::size_t cols = header["dims"][1].get<std::size_t>();
  constexpr std::size_t kMaxEntries = std::size_t{1} << 40;  // 8 TiB payload cap
  if (cols != 0 && rows > kMaxEntries / cols) {
    throw IoError("tensor record: dims claim an implausible payload (byte offset 12)",
                  12);
  }
  const std::ptrdiff_t payload_offset = 12 + static_cast<std::ptrdiff_t>(header_len);

  RealMatrix matrix(rows, cols);
  std::vector<char> payload(rows * cols * 8);
  if (!payload.empty() && !in.read(payload.data(), payload.size())) {
    throw IoError("tensor record: truncated payload (byte offset " +
                      std::to_string(payload_offset) + ")",
                  payload_offset);
  }
  for (std::size_t i = 0; i < rows * cols; ++i) {
    matrix.data()[i] = get_f64_le(payload.data() + 8 * i);
  }
  if (header_out != nullptr) *header_out = std::move(header);
  return matrix;
}

void write_tensor_record(std::ostream& out, const RealMatrix& matrix,
                         const nlohmann::json& header) {
  const std::string header_text = header.dump();
  out.write(kMagic, 8);
  put_u32_le(out, static_cast<std::uint32_t>(header_text.size()));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (double v : matrix.data()) put_f64_le(out, v);
  if (!out) throw IoError("tensor record: write failed");
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

}  // namespace

void write_tensor(std::ostream& out, const RealMatrix& matrix) {
  write_tensor_record(out, matrix, tensor_header(matrix));
}

RealMatrix read_tensor(std::istream& in) { return read_tensor_record(in, nullptr); }

void write_tensor_file(const std::string& path, const RealMatrix& matrix) {
  auto out = open_output(path);
  write_tensor(out, matrix);
}

RealMatrix read_tensor_file(const std::string& path) {
  auto in = open_input(path);
  return read_tensor(in);
}

void write_inputs_bundle(const std::string& path, const AttentionInputs& inputs) {
  auto out = open_output(path);
  nlohmann::json q_header = tensor_header(inputs.Q);
  q_header["prescaled"] = inputs.prescaled;
  write_tensor_record(out, inputs.Q, q_header);
  write_tensor(out, inputs.K);
  write_tensor(out, inputs.V);
}

AttentionInputs read_inputs_bundle(const std::string& path) {
  auto in = open_input(path);
  nlohmann::json q_header;
  RealMatrix q = read_tensor_record(in, &q_header);
  RealMatrix k = read_tensor(in);
  RealMatrix v = read_tensor(in);
  return AttentionInputs(std::move(q), std::move(k), std::move(v),
                         q_header.value("prescaled", false));
}

}  // namespace mcattn
