#include "wvsim/status.hpp"

namespace wvsim {

const char* to_string(Status s) {
  switch (s) {
    case Status::Ok: return "OK";
    case Status::LengthError: return "LengthError";
    case Status::BadMagic: return "BadMagic";
    case Status::BadCrc: return "BadCrc";
    case Status::EntropyError: return "EntropyError";
    case Status::IntegrityError: return "IntegrityError";
    case Status::EmptyBlob: return "EmptyBlob";
    case Status::KeyLengthError: return "KeyLengthError";
    case Status::BadPadding: return "BadPadding";
    case Status::CryptoError: return "CryptoError";
    case Status::TooManySessions: return "TooManySessions";
    case Status::UnknownSession: return "UnknownSession";
    case Status::RateLimited: return "RateLimited";
    case Status::NoDerivedKeys: return "NoDerivedKeys";
    case Status::StaleNonce: return "StaleNonce";
    case Status::BadServerMac: return "BadServerMac";
    case Status::BadStorageMac: return "BadStorageMac";
    case Status::MalformedKey: return "MalformedKey";
    case Status::NoRsaKey: return "NoRsaKey";
    case Status::OaepError: return "OaepError";
    case Status::BadKcbMagic: return "BadKcbMagic";
    case Status::UnknownKeyId: return "UnknownKeyId";
    case Status::NoKeySelected: return "NoKeySelected";
    case Status::KeyExpired: return "KeyExpired";
    case Status::UsageDenied: return "UsageDenied";
    case Status::NoKeybox: return "NoKeybox";
    case Status::Unsupported: return "Unsupported";
    case Status::UnknownDevice: return "UnknownDevice";
    case Status::BadClientMac: return "BadClientMac";
    case Status::BadSignature: return "BadSignature";
    case Status::MalformedFrame: return "MalformedFrame";
    case Status::UnknownMsgType: return "UnknownMsgType";
    case Status::IoError: return "IoError";
    case Status::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace wvsim
