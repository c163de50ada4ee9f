// Copyright (c) 2026 The tdnn-kws Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace kws {

// Fixed-capacity ring that overwrites its oldest element. Indexing is by
// age: back(0) is the newest element, back(size() - 1) the oldest.
template <typename T>
class RingBuffer {
 public:
  explicit RingBuffer(std::size_t capacity = 0) : slots_(capacity) {}

  std::size_t capacity() const { return slots_.size(); }
  std::size_t size() const { return size_; }
  bool full() const { return size_ == slots_.size(); }
  bool empty() const { return size_ == 0; }

  void clear() {
    head_ = 0;
    size_ = 0;
  }

  // Returns the slot that now holds the newest element so callers can fill
  // it in place without reallocating.
  T& push_slot() {
    assert(!slots_.empty());
    head_ = (head_ + 1) % slots_.size();
    if (size_ < slots_.size()) ++size_;
    return slots_[head_];
  }

  void push(T value) { push_slot() = std::move(value); }

  const T& back(std::size_t age = 0) const {
    assert(age < size_);
    return slots_[(head_ + slots_.size() - age) % slots_.size()];
  }

  // Chronological access: at(0) is the oldest element still held.
  const T& at(std::size_t i) const { return back(size_ - 1 - i); }

 private:
  std::vector<T> slots_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

}  // namespace kws
