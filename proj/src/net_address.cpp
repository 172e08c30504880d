#include "openweather/net_address.hpp"

#include <arpa/inet.h>

#include <string>

namespace owp {

bool valid_ip_address(std::string_view text) {
  std::string s(text);
  unsigned char buf[16];
  return inet_pton(AF_INET, s.c_str(), buf) == 1 || inet_pton(AF_INET6, s.c_str(), buf) == 1;
}

}  // namespace owp
