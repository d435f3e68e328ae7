#pragma once

namespace wvsim {

// One status vocabulary for the whole stack; trace lines print these names.
enum class Status {
  Ok = 0,

  // keybox
  LengthError,
  BadMagic,
  BadCrc,
  EntropyError,
  IntegrityError,

  // derivation / primitives
  EmptyBlob,
  KeyLengthError,
  BadPadding,
  CryptoError,

  // CDM state machine
  TooManySessions,
  UnknownSession,
  RateLimited,
  NoDerivedKeys,
  StaleNonce,
  BadServerMac,
  BadStorageMac,
  MalformedKey,
  NoRsaKey,
  OaepError,
  BadKcbMagic,
  UnknownKeyId,
  NoKeySelected,
  KeyExpired,
  UsageDenied,
  NoKeybox,
  Unsupported,

  // servers
  UnknownDevice,
  BadClientMac,
  BadSignature,

  // wire / transport / harness
  MalformedFrame,
  UnknownMsgType,
  IoError,
  ConfigError,
};

const char* to_string(Status s);

inline bool ok(Status s) { return s == Status::Ok; }

}  // namespace wvsim
