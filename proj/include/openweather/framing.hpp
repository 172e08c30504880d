#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace owp {

// Largest message body, newline excluded.
inline constexpr std::size_t kMaxFrameBytes = 64 * 1024;

// Appends the terminating newline. Throws FramingError if the body is too
// large or already contains a newline.
std::string make_frame(std::string_view body);

// Reassembles newline-delimited frames from arbitrary stream chunks.
class FrameReader {
 public:
  // Throws FramingError once the pending partial frame passes the cap; the
  // reader is unusable afterwards.
  void feed(std::string_view chunk);

  // Next complete body without its newline (a trailing CR is stripped).
  std::optional<std::string> next();

  std::size_t buffered() const { return buffer_.size() - consumed_; }

 private:
  std::string buffer_;
  std::size_t consumed_ = 0;
  std::size_t scanned_ = 0;
};

}  // namespace owp
