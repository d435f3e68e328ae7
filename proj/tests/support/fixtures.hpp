#pragma once

// Canonical wire-message examples backing the golden fixture files, plus a
// random schema-valid message generator for round-trip checks. Shared by the
// unit tests and the release gate so both compare against the same bytes.

#include <string>
#include <vector>

#include "wvsim/random.hpp"
#include "wvsim/wire.hpp"

namespace wvsim::testing {

wire::Message fixture_error();
wire::Message fixture_prov_req();
wire::Message fixture_prov_resp();
wire::Message fixture_lic_req();
wire::Message fixture_lic_resp();
wire::Message fixture_refresh_req();
wire::Message fixture_refresh_resp();

struct WireFixture {
  const char* name;
  wire::Message msg;
};

// One fixture per message type, in MsgType order.
std::vector<WireFixture> wire_fixtures();

// Absolute path of a committed fixture file.
std::string fixture_path(const char* name);

// Draws a message of a random type with a random subset of fields present;
// every draw satisfies the codec schema.
wire::Message random_wire_message(RandomSource& rng);

}  // namespace wvsim::testing
