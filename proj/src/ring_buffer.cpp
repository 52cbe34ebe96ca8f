#include "sirenedge/ring_buffer.hpp"

#include <algorithm>
#include <string>

#include "sirenedge/error.hpp"

namespace sirenedge {

RingBuffer::RingBuffer(std::size_t capacity_samples) : storage_(capacity_samples, 0.0f) {
  if (capacity_samples == 0) throw Error(ErrorCode::ConfigError, "ring buffer capacity must be positive");
}

std::uint64_t RingBuffer::total_written() const {
  std::lock_guard lock(mutex_);
  return total_written_;
}

std::size_t RingBuffer::write_pos() const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(total_written_ % storage_.size());
}

void RingBuffer::write(std::span<const float> chunk) {
  const std::size_t cap = storage_.size();
  if (chunk.size() > cap)
    throw Error(ErrorCode::ChunkTooLarge, std::to_string(chunk.size()) + " samples into a buffer of " +
                                              std::to_string(cap));
  if (chunk.empty()) return;
  {
    std::lock_guard lock(mutex_);
    const std::size_t pos = static_cast<std::size_t>(total_written_ % cap);
    const std::size_t first = std::min(chunk.size(), cap - pos);
    std::copy_n(chunk.begin(), first, storage_.begin() + static_cast<std::ptrdiff_t>(pos));
    std::copy(chunk.begin() + static_cast<std::ptrdiff_t>(first), chunk.end(), storage_.begin());
    total_written_ += chunk.size();
    ++pending_writes_;
  }
  data_cv_.notify_one();
}

void RingBuffer::copy_window(std::uint64_t end, std::span<float> out) const {
  const std::size_t cap = storage_.size();
  const std::size_t n = out.size();
  // Part of the window before stream position 0 is zero padding.
  const std::size_t pad = end < n ? static_cast<std::size_t>(n - end) : 0;
  std::fill_n(out.begin(), pad, 0.0f);
  std::uint64_t src = end - (n - pad);
  for (std::size_t i = pad; i < n;) {
    const std::size_t idx = static_cast<std::size_t>(src % cap);
    const std::size_t run = std::min(n - i, cap - idx);
    std::copy_n(storage_.begin() + static_cast<std::ptrdiff_t>(idx), run,
                out.begin() + static_cast<std::ptrdiff_t>(i));
    i += run;
    src += run;
  }
}

std::uint64_t RingBuffer::read_latest(std::span<float> out) const {
  if (out.size() > storage_.size())
    throw Error(ErrorCode::WindowTooLarge, std::to_string(out.size()) + " samples from a buffer of " +
                                               std::to_string(storage_.size()));
  std::lock_guard lock(mutex_);
  copy_window(total_written_, out);
  return total_written_;
}

std::vector<float> RingBuffer::read_latest(std::size_t n) const {
  std::vector<float> out(n);
  read_latest(std::span<float>(out));
  return out;
}

void RingBuffer::read_ending_at(std::uint64_t end, std::span<float> out) const {
  if (out.size() > storage_.size())
    throw Error(ErrorCode::WindowTooLarge, std::to_string(out.size()) + " samples from a buffer of " +
                                               std::to_string(storage_.size()));
  std::lock_guard lock(mutex_);
  if (end > total_written_)
    throw Error(ErrorCode::WindowTooLarge, "window ends past the newest sample");
  if (total_written_ - end + out.size() > storage_.size())
    throw Error(ErrorCode::WindowTooLarge, "window has already been overwritten");
  copy_window(end, out);
}

WaitStatus RingBuffer::await_new_data() {
  std::unique_lock lock(mutex_);
  data_cv_.wait(lock, [this] { return shutdown_ || pending_writes_ > 0 || closed_; });
  if (shutdown_) return WaitStatus::Shutdown;
  if (pending_writes_ > 0) {
    pending_writes_ = 0;
    return WaitStatus::NewData;
  }
  return WaitStatus::Closed;
}

void RingBuffer::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  data_cv_.notify_all();
}

void RingBuffer::shutdown() {
  {
    std::lock_guard lock(mutex_);
    shutdown_ = true;
  }
  data_cv_.notify_all();
}

bool RingBuffer::is_shutdown() const {
  std::lock_guard lock(mutex_);
  return shutdown_;
}

}  // namespace sirenedge
