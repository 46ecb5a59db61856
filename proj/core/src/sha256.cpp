#include "sspfield/hash.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <memory>

#include "sspfield/errors.hpp"

namespace sspfield {

std::string sha256_hex(const void* data, std::size_t len) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data, len) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &digest_len) != 1)
    throw Error("sha256 digest failure");
  static const char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(digest_len * 2);
  for (unsigned int i = 0; i < digest_len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string hash_params(const ParameterStore& store, const std::string& prefix) {
  std::string bytes;
  for (const auto& e : store.entries()) {
    if (!prefix.empty() && e.name.rfind(prefix, 0) != 0) continue;
    bytes.append(e.name);
    bytes.push_back('\0');
    const char* p = reinterpret_cast<const char*>(e.value.data());
    bytes.append(p, e.value.size() * sizeof(double));
  }
  return sha256_hex(bytes.data(), bytes.size());
}

}  // namespace sspfield
