#include <catch_amalgamated.hpp>

#include <random>
#include <unordered_set>

#include "trustlab/codec.hpp"
#include "trustlab/well_formed.hpp"
#include "message_gen.hpp"

using namespace trustlab;

TEST_CASE("digest_of is deterministic and 32 bytes") {
  const std::string s = "hello";
  CHECK(digest_of(s) == digest_of(s));
  CHECK(digest_of("") == digest_of(""));
  CHECK(digest_of("").hex() ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(digest_of("").hex().size() == 64);
}

TEST_CASE("no collisions among 10^5 distinct random inputs") {
  std::mt19937_64 rng(42);
  std::unordered_set<std::string> inputs;
  std::unordered_set<Digest> digests;
  while (inputs.size() < 100000) {
    std::string s(1 + rng() % 24, '\0');
    for (auto& c : s) c = static_cast<char>(rng());
    if (inputs.insert(s).second) digests.insert(digest_of(s));
  }
  CHECK(digests.size() == inputs.size());
}

TEST_CASE("every message variant round-trips through the wire format") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const ProtocolMessage m = testgen::random_message(rng, i % 8);
    const auto bytes = encode(m);
    CHECK(decode_message(bytes) == m);
    CHECK(encode(decode_message(bytes)) == bytes);
  }
}

TEST_CASE("truncated or padded encodings are rejected") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const auto bytes = encode(testgen::random_message(rng, i % 8));
    const auto cut = rng() % bytes.size();
    CHECK_THROWS_AS(decode_message(std::span(bytes.data(), cut)), DecodeError);
    auto padded = bytes;
    padded.push_back(0);
    CHECK_THROWS_AS(decode_message(padded), DecodeError);
  }
  std::vector<std::uint8_t> bad_tag{42};
  CHECK_THROWS_AS(decode_message(bad_tag), DecodeError);
}

TEST_CASE("the signed body excludes the outer authenticator") {
  std::mt19937_64 rng(3);
  auto m = testgen::random_message(rng, 2);
  const auto body = encode_body(m);
  auth_of(m).tag = {1, 2, 3};
  CHECK(encode_body(m) == body);
}
