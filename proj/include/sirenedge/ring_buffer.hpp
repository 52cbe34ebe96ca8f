#pragma once

#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <span>
#include <vector>

namespace sirenedge {

enum class WaitStatus {
  NewData,   // at least one write happened since the last acknowledged wait
  Closed,    // producer finished and every write has been acknowledged
  Shutdown,  // abort requested
};

// Fixed-capacity circular sample buffer shared by one producer and one
// consumer. Storage is allocated once at construction. Reads copy out the
// most recent samples across the wrap boundary and never consume data;
// windows reaching before the start of the stream are left-padded with zeros.
//
// Writes are counted rather than queued: any number of unacknowledged writes
// collapse into a single NewData wake-up.
class RingBuffer {
 public:
  explicit RingBuffer(std::size_t capacity_samples);

  RingBuffer(const RingBuffer&) = delete;
  RingBuffer& operator=(const RingBuffer&) = delete;

  std::size_t capacity() const noexcept { return storage_.size(); }
  std::uint64_t total_written() const;
  std::size_t write_pos() const;

  // Throws ChunkTooLarge when chunk.size() > capacity(). Empty chunks are
  // ignored and do not signal the consumer.
  void write(std::span<const float> chunk);

  // Copies the last out.size() samples into `out` and returns the stream
  // position one past the newest sample copied (== total_written()).
  std::uint64_t read_latest(std::span<float> out) const;
  std::vector<float> read_latest(std::size_t n) const;

  // Copies the out.size() samples ending at absolute stream position `end`.
  // `end` may not exceed total_written() and the window must still be
  // resident, i.e. total_written() - end + out.size() <= capacity().
  void read_ending_at(std::uint64_t end, std::span<float> out) const;

  WaitStatus await_new_data();
  // Producer side: no more writes will follow.
  void close();
  // Broadcast abort; wakes any waiter.
  void shutdown();
  bool is_shutdown() const;

 private:
  void copy_window(std::uint64_t end, std::span<float> out) const;

  mutable std::mutex mutex_;
  std::condition_variable data_cv_;
  std::vector<float> storage_;
  std::uint64_t total_written_ = 0;
  std::uint64_t pending_writes_ = 0;
  bool closed_ = false;
  bool shutdown_ = false;
};

}  // namespace sirenedge
