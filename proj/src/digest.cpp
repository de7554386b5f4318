#include "reljudge/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

namespace reljudge {

namespace {

std::array<unsigned char, 32> sha256_raw(std::string_view data) {
  std::array<unsigned char, 32> out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(),
                 nullptr) != 1 ||
      len != out.size()) {
    throw std::runtime_error("sha256 digest failed");
  }
  return out;
}

} // namespace

std::string sha256_hex(std::string_view data) {
  static const char hexd[] = "0123456789abcdef";
  const auto raw = sha256_raw(data);
  std::string hex(64, '0');
  for (std::size_t i = 0; i < raw.size(); ++i) {
    hex[2 * i] = hexd[raw[i] >> 4];
    hex[2 * i + 1] = hexd[raw[i] & 0xf];
  }
  return hex;
}

std::uint64_t sha256_u64(std::string_view data) {
  const auto raw = sha256_raw(data);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v = (v << 8) | raw[i];
  }
  return v;
}

} // namespace reljudge
