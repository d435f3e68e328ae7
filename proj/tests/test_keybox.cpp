#include <cstring>

#include "doctest.h"
#include "wvsim/crc32.hpp"
#include "wvsim/keybox.hpp"
#include "wvsim/random.hpp"

using namespace wvsim;

namespace {

Keybox make_fixture(uint64_t seed = 1) {
  DeterministicRandom rng(seed);
  Keybox kb;
  REQUIRE(generate_keybox(rng, kb) == Status::Ok);
  return kb;
}

}  // namespace

TEST_SUITE("keybox") {

TEST_CASE("serialization is exactly 128 bytes with fixed offsets") {
  const Keybox kb = make_fixture();
  const auto raw = serialize_keybox(kb);
  REQUIRE(raw.size() == kKeyboxSize);
  CHECK(std::memcmp(raw.data(), kb.device_id.data(), 32) == 0);
  CHECK(std::memcmp(raw.data() + 32, kb.device_key.data(), 16) == 0);
  CHECK(std::memcmp(raw.data() + 48, kb.provisioning_token.data(), 72) == 0);
  CHECK(std::memcmp(raw.data() + 120, "kbox", 4) == 0);
  CHECK(load_be32(raw.data() + 124) == kb.crc);
  CHECK(kb.crc == crc32(ByteView(raw.data(), 124)));
}

TEST_CASE("parse then serialize is the identity") {
  const Keybox kb = make_fixture(2);
  const auto raw = serialize_keybox(kb);
  Keybox back;
  REQUIRE(parse_keybox(ByteView(raw.data(), raw.size()), back) == Status::Ok);
  CHECK(back == kb);
  CHECK(validate_keybox(back) == KeyboxVerdict::Ok);
}

TEST_CASE("parse rejects wrong sizes") {
  Keybox kb;
  const Bytes short_buf(127, 0);
  CHECK(parse_keybox(view(short_buf), kb) == Status::LengthError);
  const Bytes long_buf(129, 0);
  CHECK(parse_keybox(view(long_buf), kb) == Status::LengthError);
  CHECK(parse_keybox(ByteView{}, kb) == Status::LengthError);
}

TEST_CASE("validation checks magic before crc") {
  Keybox kb = make_fixture(3);
  kb.magic[0] = 'X';
  CHECK(validate_keybox(kb) == KeyboxVerdict::BadMagic);

  Keybox kb2 = make_fixture(3);
  kb2.crc ^= 1;
  CHECK(validate_keybox(kb2) == KeyboxVerdict::BadCrc);

  // Magic wins when both are wrong.
  Keybox kb3 = make_fixture(3);
  kb3.magic[3] = '?';
  kb3.crc ^= 0xffffffffu;
  CHECK(validate_keybox(kb3) == KeyboxVerdict::BadMagic);
}

TEST_CASE("every single-bit corruption of bytes 0..123 fails validation") {
  const Keybox kb = make_fixture(4);
  auto raw = serialize_keybox(kb);
  size_t failures = 0;
  for (size_t bit = 0; bit < 124 * 8; ++bit) {
    raw[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
    Keybox corrupt;
    if (parse_keybox(ByteView(raw.data(), raw.size()), corrupt) !=
            Status::Ok ||
        validate_keybox(corrupt) != KeyboxVerdict::Ok) {
      ++failures;
    }
    raw[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
  }
  CHECK(failures == 992);
}

TEST_CASE("generate produces distinct devices") {
  SystemRandom rng;
  Keybox a, b;
  REQUIRE(generate_keybox(rng, a) == Status::Ok);
  REQUIRE(generate_keybox(rng, b) == Status::Ok);
  CHECK(a.device_id != b.device_id);
  CHECK(a.device_key != b.device_key);
  CHECK(validate_keybox(a) == KeyboxVerdict::Ok);
  CHECK(validate_keybox(b) == KeyboxVerdict::Ok);
}

TEST_CASE("wrap and install round-trip") {
  DeterministicRandom rng(5);
  const Keybox kb = make_fixture(5);
  const Aes128Key transport = rng.key16();
  Bytes wrapped;
  REQUIRE(wrap_keybox(kb, transport, rng, wrapped) == Status::Ok);
  CHECK(wrapped.size() == 160);  // 16 IV + 9 padded blocks

  Keybox out;
  REQUIRE(install_keybox(view(wrapped), transport, out) == Status::Ok);
  CHECK(out == kb);
}

TEST_CASE("install rejects the wrong transport key") {
  DeterministicRandom rng(6);
  const Keybox kb = make_fixture(6);
  const Aes128Key transport = rng.key16();
  Bytes wrapped;
  REQUIRE(wrap_keybox(kb, transport, rng, wrapped) == Status::Ok);

  Aes128Key wrong = transport;
  wrong[0] ^= 1;
  Keybox out;
  CHECK(install_keybox(view(wrapped), wrong, out) == Status::IntegrityError);
}

TEST_CASE("install rejects tampered payload") {
  DeterministicRandom rng(7);
  const Keybox kb = make_fixture(7);
  const Aes128Key transport = rng.key16();
  Bytes wrapped;
  REQUIRE(wrap_keybox(kb, transport, rng, wrapped) == Status::Ok);

  Keybox out;
  Bytes tampered = wrapped;
  tampered[40] ^= 0x80;
  CHECK(install_keybox(view(tampered), transport, out) ==
        Status::IntegrityError);

  const Bytes tiny(8, 0);
  CHECK(install_keybox(view(tiny), transport, out) == Status::IntegrityError);
}

TEST_CASE("two wraps of the same keybox differ by IV") {
  DeterministicRandom rng(8);
  const Keybox kb = make_fixture(8);
  const Aes128Key transport = rng.key16();
  Bytes w1, w2;
  REQUIRE(wrap_keybox(kb, transport, rng, w1) == Status::Ok);
  REQUIRE(wrap_keybox(kb, transport, rng, w2) == Status::Ok);
  CHECK(w1 != w2);
}

}  // TEST_SUITE
