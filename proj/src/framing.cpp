#include "openweather/framing.hpp"

#include "openweather/errors.hpp"

namespace owp {

std::string make_frame(std::string_view body) {
  if (body.size() > kMaxFrameBytes) {
    throw FramingError("frame of " + std::to_string(body.size()) + " bytes exceeds the " +
                       std::to_string(kMaxFrameBytes) + " byte limit");
  }
  if (body.find('\n') != std::string_view::npos) throw FramingError("frame body contains a newline");
  std::string out;
  out.reserve(body.size() + 1);
  out.append(body);
  out.push_back('\n');
  return out;
}

void FrameReader::feed(std::string_view chunk) {
  if (consumed_ > 0 && consumed_ == buffer_.size()) {
    buffer_.clear();
    consumed_ = scanned_ = 0;
  }
  buffer_.append(chunk);
  // Only the unterminated tail counts against the cap.
  auto last_nl = buffer_.rfind('\n');
  std::size_t tail_start = last_nl == std::string::npos ? consumed_ : last_nl + 1;
  if (tail_start < consumed_) tail_start = consumed_;
  if (buffer_.size() - tail_start > kMaxFrameBytes + 1) {
    throw FramingError("incoming frame exceeds the " + std::to_string(kMaxFrameBytes) + " byte limit");
  }
}

std::optional<std::string> FrameReader::next() {
  if (scanned_ < consumed_) scanned_ = consumed_;
  auto nl = buffer_.find('\n', scanned_);
  if (nl == std::string::npos) {
    scanned_ = buffer_.size();
    return std::nullopt;
  }
  std::size_t end = nl;
  if (end > consumed_ && buffer_[end - 1] == '\r') --end;
  if (end - consumed_ > kMaxFrameBytes) {
    throw FramingError("incoming frame exceeds the " + std::to_string(kMaxFrameBytes) + " byte limit");
  }
  std::string body = buffer_.substr(consumed_, end - consumed_);
  consumed_ = scanned_ = nl + 1;
  if (consumed_ > 4096 && consumed_ * 2 > buffer_.size()) {
    buffer_.erase(0, consumed_);
    consumed_ = scanned_ = 0;
  }
  return body;
}

}  // namespace owp
