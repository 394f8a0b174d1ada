#pragma once

// In-memory append-only RIC database holding ciphertext records. Optional
// persistence appends each record to a log of ENC_KPM frames.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ztric/errors.hpp"
#include "ztric/pipeline/frame.hpp"

namespace ztric::pipeline {

// Microseconds on the monotonic clock. On Linux this is CLOCK_MONOTONIC, which
// is shared by every process on the host, so stamps compare across processes.
inline std::int64_t now_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct DbRecord {
  std::uint64_t window_id = 0;
  std::int64_t stored_at_us = 0;
  std::string payload;  // ENC_KPM payload as received
};

class RicDatabase {
 public:
  struct Cursor {
    std::size_t next = 0;
  };

  RicDatabase() = default;
  explicit RicDatabase(const std::filesystem::path& log_path) : log_(log_path, std::ios::binary | std::ios::trunc) {
    if (!log_) throw IoError("cannot open database log " + log_path.string());
  }

  std::size_t append(std::uint64_t window_id, std::string payload) {
    std::lock_guard lock(mu_);
    if (closed_) throw Error("database is closed for writes");
    DbRecord rec{window_id, now_us(), std::move(payload)};
    if (log_.is_open()) {
      const Bytes frame = encode_frame({MsgType::EncKpm, window_id, rec.payload});
      log_.write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size()));
      log_.flush();
      if (!log_) throw IoError("database log write failed");
    }
    records_.push_back(std::move(rec));
    cv_.notify_all();
    return records_.size() - 1;
  }

  // No more appends; pollers drain what is left and then see nullopt.
  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    cv_.notify_all();
  }

  // Next record for this cursor. Returns nullopt on timeout, or at once when
  // the database is closed and the cursor is drained.
  std::optional<DbRecord> poll(Cursor& cur, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return cur.next < records_.size() || closed_; });
    if (cur.next < records_.size()) return records_[cur.next++];
    return std::nullopt;
  }

  bool drained(const Cursor& cur) const {
    std::lock_guard lock(mu_);
    return closed_ && cur.next >= records_.size();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return records_.size();
  }

  std::vector<DbRecord> snapshot() const {
    std::lock_guard lock(mu_);
    return records_;
  }

  // Reads a persistence log back into (window_id, payload) records.
  static std::vector<DbRecord> read_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open database log " + path.string());
    Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    FrameDecoder dec;
    dec.feed(bytes);
    std::vector<DbRecord> out;
    while (auto f = dec.next()) out.push_back({f->correlation_id, 0, std::move(f->payload)});
    if (dec.buffered() != 0) throw ProtocolError("truncated database log");
    return out;
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<DbRecord> records_;
  bool closed_ = false;
  std::ofstream log_;
};

}  // namespace ztric::pipeline
