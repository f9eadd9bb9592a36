// SPDX-License-Identifier: Apache-2.0
#include "sflgame/channel.hpp"

#include <cstring>

#include "sflgame/error.hpp"

namespace sflgame {

namespace {
constexpr std::size_t kHeader = 2 * sizeof(std::uint64_t);
}

std::vector<std::uint8_t> serialize(const Tensor& t) {
  require(t.rows * t.cols == t.data.size(), ErrorCode::shape, "tensor shape does not match its data");
  std::vector<std::uint8_t> out(kHeader + t.data.size() * sizeof(double));
  const std::uint64_t dims[2] = {t.rows, t.cols};
  std::memcpy(out.data(), dims, kHeader);
  if (!t.data.empty()) std::memcpy(out.data() + kHeader, t.data.data(), t.data.size() * sizeof(double));
  return out;
}

Tensor deserialize(const std::vector<std::uint8_t>& bytes) {
  require(bytes.size() >= kHeader, ErrorCode::shape, "truncated tensor header");
  std::uint64_t dims[2];
  std::memcpy(dims, bytes.data(), kHeader);
  Tensor t;
  t.rows = dims[0];
  t.cols = dims[1];
  require(bytes.size() == kHeader + t.rows * t.cols * sizeof(double), ErrorCode::shape, "truncated tensor payload");
  t.data.resize(t.rows * t.cols);
  if (!t.data.empty()) std::memcpy(t.data.data(), bytes.data() + kHeader, t.data.size() * sizeof(double));
  return t;
}

void Channel::send(const Tensor& t) {
  auto bytes = serialize(t);
  bytes_sent_ += bytes.size();
  ++messages_sent_;
  queue_.push_back(std::move(bytes));
}

Tensor Channel::receive() {
  require(!queue_.empty(), ErrorCode::shape, "receive on an empty channel");
  Tensor t = deserialize(queue_.front());
  queue_.pop_front();
  return t;
}

}  // namespace sflgame
