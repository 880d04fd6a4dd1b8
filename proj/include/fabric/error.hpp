#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fabric {

enum class ErrorCode {
  // fabric-model
  DuplicateId,
  InvalidSpeed,
  InvalidVlan,
  InvalidCapacity,
  UnknownDevice,
  UnknownVfc,
  UnknownPort,
  UnknownLink,
  UnknownEndpoint,
  DuplicatePort,
  VfcLimitExceeded,
  TunnelVlanConflict,
  PhysicalPortAlreadyDedicated,
  PortInUse,
  CrossOverlayLink,
  SelfLink,
  ParseError,
  // dataplane
  InvalidRule,
  DanglingMeterRef,
  // admission
  Infeasible,
  BadWindow,
  EndpointBusy,
  BadRequest,
  UnknownService,
  AlreadyTerminal,
  // sdx-l2
  DuplicateName,
  UnknownCircuit,
  // cluster
  NoQuorum,
  UnknownReplica,
  // nsi
  WrongState,
  UnknownCorrelation,
  UnknownDomain,
};

std::string_view to_string(ErrorCode code);

/// Rejections are admission refusals (reported as Rejected(reason)) rather
/// than malformed or unknown-object errors.
bool is_rejection(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace fabric
