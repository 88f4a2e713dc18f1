#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "trustlab/messages.hpp"

namespace trustlab {

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Little-endian, length-prefixed writer. Layout is documented in docs/wire_format.md.
class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void boolean(bool b) { u8(b ? 1 : 0); }
  void bytes(std::span<const std::uint8_t> b);
  void str(std::string_view s);
  void digest(const Digest& d);

  const std::vector<std::uint8_t>& buffer() const { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  bool boolean();
  std::vector<std::uint8_t> bytes();
  std::string str();
  Digest digest();
  /// Element count guarded against lengths the remaining input cannot hold.
  std::uint32_t count(std::size_t min_element_bytes = 1);

  bool done() const { return pos_ == data_.size(); }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const;
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

void encode(Writer& w, const Transaction& t);
void encode(Writer& w, const Batch& b);
void encode(Writer& w, const Authenticator& a);
void encode(Writer& w, const Attestation& a);
void encode(Writer& w, const ProtocolMessage& m);

Transaction decode_transaction(Reader& r);
Batch decode_batch(Reader& r);
Authenticator decode_authenticator(Reader& r);
Attestation decode_attestation(Reader& r);
ProtocolMessage decode_message(Reader& r);

std::vector<std::uint8_t> encode(const ProtocolMessage& m);
ProtocolMessage decode_message(std::span<const std::uint8_t> bytes);

/// Everything but the outer authenticator; this is what gets signed.
std::vector<std::uint8_t> encode_body(const ProtocolMessage& m);
std::vector<std::uint8_t> encode_attestation_body(const Attestation& a);

Digest batch_digest(const Batch& b);
Digest body_digest(const ProtocolMessage& m);
Digest attestation_body_digest(const Attestation& a);

}  // namespace trustlab
