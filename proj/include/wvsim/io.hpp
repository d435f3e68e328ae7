#pragma once

#include <string>

#include "wvsim/bytes.hpp"
#include "wvsim/status.hpp"

namespace wvsim {

Status read_file(const std::string& path, Bytes& out);
Status write_file(const std::string& path, ByteView data);
bool file_exists(const std::string& path);

}  // namespace wvsim
