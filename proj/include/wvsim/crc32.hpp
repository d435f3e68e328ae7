#pragma once

#include <cstdint>

#include "wvsim/bytes.hpp"

namespace wvsim {

// Reflected CRC-32, polynomial 0xEDB88320, init/xorout 0xFFFFFFFF.
// crc32("123456789") == 0xCBF43926.
uint32_t crc32(ByteView data);

}  // namespace wvsim
