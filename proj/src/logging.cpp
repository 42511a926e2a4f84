#include "lessonrag/logging.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace lessonrag {

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto existing = spdlog::get("lessonrag");
    if (existing) return existing;
    auto created = spdlog::stderr_color_mt("lessonrag");
    created->set_level(spdlog::level::info);
    return created;
  }();
  return instance;
}

}  // namespace lessonrag
