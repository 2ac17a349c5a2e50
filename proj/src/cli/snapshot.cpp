// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#include "sage/cli/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "sage/errors.hpp"

namespace sage::cli {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

namespace {

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, s_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  void need(std::size_t n) const {
    if (s_.size() - pos_ < n) throw InvalidArgument("snapshot is truncated");
  }
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_snapshot(const ParamSet& params) {
  std::string out(kSnapshotMagic, 8);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.tensor_count()));
  for (const auto& t : params.tensors()) {
    if (t.name.size() > std::numeric_limits<std::uint16_t>::max()) throw InvalidArgument("tensor name too long");
    put<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    out += t.name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.kind()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t e : t.shape) put<std::uint32_t>(out, static_cast<std::uint32_t>(e));
    for (double v : t.values) put<double>(out, v);
  }
  return out;
}

ParamSet decode_snapshot(const std::string& bytes) {
  Reader r(bytes);
  if (r.bytes(8) != std::string(kSnapshotMagic, 8)) throw InvalidArgument("not a parameter snapshot (bad magic)");
  const auto count = r.get<std::uint32_t>();
  ParamSet out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint16_t>();
    std::string name = r.bytes(name_len);
    const auto kind = r.get<std::uint8_t>();
    const auto rank = r.get<std::uint32_t>();
    if (rank == 0 || rank > 8) throw InvalidArgument("snapshot tensor '" + name + "' has bad rank");
    std::vector<std::size_t> shape(rank);
    std::size_t size = 1;
    for (auto& e : shape) {
      e = r.get<std::uint32_t>();
      size *= e;
    }
    const auto expected = static_cast<std::uint8_t>(rank >= 2 ? TensorKind::matrix : TensorKind::vector);
    if (kind != expected) throw InvalidArgument("snapshot tensor '" + name + "' kind does not match its rank");
    if (size > bytes.size() / 8) throw InvalidArgument("snapshot is truncated");
    std::vector<double> values(size);
    for (auto& v : values) v = r.get<double>();
    out.add(std::move(name), std::move(shape), std::move(values));
  }
  if (!r.done()) throw InvalidArgument("trailing bytes after snapshot");
  return out;
}

void write_snapshot(const std::string& path, const ParamSet& params) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InvalidArgument("cannot write '" + path + "'");
  const std::string bytes = encode_snapshot(params);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ParamSet read_snapshot(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot read '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

ParamSet state_to_snapshot(const OptimState& state) {
  ParamSet snap;
  for (const auto& t : state.params.tensors()) snap.add("param/" + t.name, t.shape, t.values);
  snap.add_vector("optim/step", {static_cast<double>(state.step)});
  if (!state.first_moment.empty()) {
    snap.add_vector("optim/m", state.first_moment);
    snap.add_vector("optim/v", state.second_moment);
  }
  return snap;
}

OptimState state_from_snapshot(const ParamSet& snap) {
  ParamSet params;
  for (const auto& t : snap.tensors()) {
    if (t.name.rfind("param/", 0) == 0) params.add(t.name.substr(6), t.shape, t.values);
  }
  if (params.tensor_count() == 0) throw InvalidArgument("state snapshot holds no parameters");
  OptimState state(std::move(params));
  const auto step_idx = snap.index_of("optim/step");
  if (!step_idx) throw InvalidArgument("state snapshot lacks optim/step");
  state.step = static_cast<std::uint64_t>(snap[*step_idx].values.at(0));
  if (const auto m = snap.index_of("optim/m")) {
    const auto v = snap.index_of("optim/v");
    if (!v) throw InvalidArgument("state snapshot has optim/m without optim/v");
    state.first_moment = snap[*m].values;
    state.second_moment = snap[*v].values;
  }
  return state;
}

}  // namespace sage::cli
