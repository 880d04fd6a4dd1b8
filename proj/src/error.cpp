#include "fabric/error.hpp"

namespace fabric {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::InvalidSpeed: return "InvalidSpeed";
    case ErrorCode::InvalidVlan: return "InvalidVlan";
    case ErrorCode::InvalidCapacity: return "InvalidCapacity";
    case ErrorCode::UnknownDevice: return "UnknownDevice";
    case ErrorCode::UnknownVfc: return "UnknownVfc";
    case ErrorCode::UnknownPort: return "UnknownPort";
    case ErrorCode::UnknownLink: return "UnknownLink";
    case ErrorCode::UnknownEndpoint: return "UnknownEndpoint";
    case ErrorCode::DuplicatePort: return "DuplicatePort";
    case ErrorCode::VfcLimitExceeded: return "VfcLimitExceeded";
    case ErrorCode::TunnelVlanConflict: return "TunnelVlanConflict";
    case ErrorCode::PhysicalPortAlreadyDedicated: return "PhysicalPortAlreadyDedicated";
    case ErrorCode::PortInUse: return "PortInUse";
    case ErrorCode::CrossOverlayLink: return "CrossOverlayLink";
    case ErrorCode::SelfLink: return "SelfLink";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidRule: return "InvalidRule";
    case ErrorCode::DanglingMeterRef: return "DanglingMeterRef";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::BadWindow: return "BadWindow";
    case ErrorCode::EndpointBusy: return "EndpointBusy";
    case ErrorCode::BadRequest: return "BadRequest";
    case ErrorCode::UnknownService: return "UnknownService";
    case ErrorCode::AlreadyTerminal: return "AlreadyTerminal";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::UnknownCircuit: return "UnknownCircuit";
    case ErrorCode::NoQuorum: return "NoQuorum";
    case ErrorCode::UnknownReplica: return "UnknownReplica";
    case ErrorCode::WrongState: return "WrongState";
    case ErrorCode::UnknownCorrelation: return "UnknownCorrelation";
    case ErrorCode::UnknownDomain: return "UnknownDomain";
  }
  return "Unknown";
}

bool is_rejection(ErrorCode code) {
  return code == ErrorCode::Infeasible || code == ErrorCode::BadWindow ||
         code == ErrorCode::EndpointBusy;
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      detail_(message) {}

}  // namespace fabric
