#include "parlr/ode.hpp"

#include <string>

namespace parlr {

std::string_view to_string(OdeMethod::Kind kind) {
    switch (kind) {
        case OdeMethod::Kind::euler:
            return "euler";
        case OdeMethod::Kind::rk4:
            return "rk4";
    }
    return "unknown";
}

OdeMethod::Kind parse_ode_kind(std::string_view name) {
    if (name == "euler") {
        return OdeMethod::Kind::euler;
    }
    if (name == "rk4") {
        return OdeMethod::Kind::rk4;
    }
    throw InvalidInput("unknown substep method '" + std::string(name) + "' (expected euler or rk4)");
}

}  // namespace parlr
