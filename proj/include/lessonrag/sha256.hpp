#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace lessonrag {

/// Incremental SHA-256 over OpenSSL's EVP interface.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::span<const std::byte> bytes);
  void update(std::string_view bytes);

  /// Lowercase hex digest. Finalizes; further updates are an error.
  std::string hex_digest();

 private:
  struct Context;
  std::unique_ptr<Context> ctx_;
  bool finalized_ = false;
};

std::string sha256_hex(std::string_view bytes);

}  // namespace lessonrag
