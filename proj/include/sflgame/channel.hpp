// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <vector>

namespace sflgame {

/// Row-major dense block exchanged between device and server.
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
};

std::vector<std::uint8_t> serialize(const Tensor& t);
Tensor deserialize(const std::vector<std::uint8_t>& bytes);

/// One-directional in-process link. Messages are serialized on send and
/// decoded on receive, in FIFO order.
class Channel {
 public:
  void send(const Tensor& t);
  Tensor receive();

  bool empty() const { return queue_.empty(); }
  std::size_t bytes_sent() const { return bytes_sent_; }
  std::size_t messages_sent() const { return messages_sent_; }

 private:
  std::deque<std::vector<std::uint8_t>> queue_;
  std::size_t bytes_sent_ = 0;
  std::size_t messages_sent_ = 0;
};

}  // namespace sflgame
