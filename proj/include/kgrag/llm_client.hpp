#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace kgrag {

struct ChatOptions {
    double temperature = 0.0;
    int max_tokens = 512;
};

struct ChatUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct ChatResult {
    std::string text;
    ChatUsage usage;
};

/// Abstract chat client: (system prompt, user prompt, decode params) ->
/// response text plus usage metadata. Implementations must be safe to call
/// from multiple threads.
class LLMClient {
public:
    virtual ~LLMClient() = default;
    virtual ChatResult chat(const std::string& system, const std::string& user,
                            const ChatOptions& options) = 0;
    virtual std::string name() const = 0;
};

/// Process-wide usage counters, aggregated across every client call.
ChatUsage llm_usage_totals();
void reset_llm_usage_totals();

struct HttpClientConfig {
    std::string base_url = "https://api.openai.com";
    std::string path = "/v1/chat/completions";
    std::string model = "gpt-4o-mini";
    /// Key read from this environment variable, falling back to
    /// OPENAI_API_KEY. Keys never appear in config files.
    std::string api_key_env = "KGRAG_API_KEY";
    int max_attempts = 3;
    int initial_backoff_ms = 500;  // doubles per retry
    int timeout_s = 60;
};

/// Chat-completions client for any OpenAI-compatible endpoint. Transport
/// failures and 5xx responses are retried with exponential backoff up to
/// max_attempts and then surface as Error("llm-unavailable"); 4xx responses
/// are never retried and surface as Error("llm-refused") carrying the
/// server message.
class HttpLLMClient : public LLMClient {
public:
    explicit HttpLLMClient(HttpClientConfig config);
    ChatResult chat(const std::string& system, const std::string& user,
                    const ChatOptions& options) override;
    std::string name() const override { return "http:" + config_.model; }

private:
    HttpClientConfig config_;
};

/// Replays recorded responses from a fixture directory: one file
/// `<key>.txt` per prompt, where the key is prompt_key(system, user). In
/// strict mode a missing fixture raises Error("llm-unavailable") naming the
/// key; otherwise a deterministic placeholder reply is returned.
class MockLLMClient : public LLMClient {
public:
    explicit MockLLMClient(std::filesystem::path fixture_dir, bool strict = true);

    static std::string prompt_key(const std::string& system, const std::string& user);

    ChatResult chat(const std::string& system, const std::string& user,
                    const ChatOptions& options) override;
    std::string name() const override { return "mock"; }

    /// Record a fixture reply for the given prompt; used to author replay
    /// directories.
    void record(const std::string& system, const std::string& user, const std::string& reply) const;

private:
    std::filesystem::path dir_;
    bool strict_;
};

}  // namespace kgrag
