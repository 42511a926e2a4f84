#pragma once

#include <memory>

#include <spdlog/logger.h>

namespace lessonrag {

/// Process-wide library logger ("lessonrag"), created on first use with a
/// stderr sink. Provider secrets are never passed to it.
std::shared_ptr<spdlog::logger> logger();

}  // namespace lessonrag
