#include "l4semu/packet.hpp"

namespace l4semu {

std::string_view to_string(EcnCodepoint ecn) {
  switch (ecn) {
    case EcnCodepoint::NotEct: return "not-ect";
    case EcnCodepoint::Ect1: return "ect1";
    case EcnCodepoint::Ect0: return "ect0";
    case EcnCodepoint::Ce: return "ce";
  }
  return "?";
}

}  // namespace l4semu
