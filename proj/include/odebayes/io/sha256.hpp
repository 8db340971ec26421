#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace odebayes {

/// Plain SHA-256, used to fingerprint configs and artifact files.
class Sha256 {
 public:
  Sha256() { reset(); }

  void reset();
  void update(std::span<const unsigned char> data);
  void update(const std::string& s) {
    update(std::span<const unsigned char>(
        reinterpret_cast<const unsigned char*>(s.data()), s.size()));
  }
  std::array<unsigned char, 32> digest();

  static std::string hex(const std::string& data);
  static std::string hex_file(const std::string& path);

 private:
  void process_block(const unsigned char* block);

  std::uint32_t state_[8];
  std::uint64_t bit_count_ = 0;
  unsigned char buffer_[64];
  std::size_t buffer_len_ = 0;
};

}  // namespace odebayes
