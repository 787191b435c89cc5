#pragma once

#include <cstdint>

namespace sba {

/// Identity of an enrolled user. Unique within one population/database.
using IdentityId = uint32_t;

}  // namespace sba
