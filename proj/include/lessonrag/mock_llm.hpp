#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "lessonrag/providers.hpp"

namespace lessonrag {

/// Network-free text generator. Reads the request block and the CONTEXT
/// entries of a prompt built from the default template and answers with a
/// well-formed plan for the requested topic, citing the retrieved pages.
/// Output is a pure function of the prompt.
class TemplateMockLlm final : public LlmProvider {
 public:
  std::string complete(std::string_view prompt, int max_tokens) override;
  std::string id() const override { return "mock-template"; }
};

/// Replays a fixed list of responses, one per call; the last one repeats
/// once the list is exhausted. An entry equal to kFail throws a
/// non-retryable ProviderError instead.
class ScriptedLlm final : public LlmProvider {
 public:
  static constexpr std::string_view kFail = "\x01provider-failure";

  explicit ScriptedLlm(std::vector<std::string> responses,
                       std::chrono::milliseconds delay = std::chrono::milliseconds(0));

  std::string complete(std::string_view prompt, int max_tokens) override;
  std::string id() const override { return "mock-scripted"; }
  bool probe() override { return reachable_; }

  std::size_t calls() const noexcept { return calls_.load(); }
  std::string last_prompt() const;
  void set_reachable(bool reachable) noexcept { reachable_ = reachable; }

 private:
  std::vector<std::string> responses_;
  std::chrono::milliseconds delay_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<bool> reachable_{true};
  mutable std::mutex mu_;
  std::string last_prompt_;
};

}  // namespace lessonrag
