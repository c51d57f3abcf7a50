#include "kgrag/llm_client.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#if defined(KGRAG_WITH_OPENSSL)
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "kgrag/errors.hpp"
#include "kgrag/text.hpp"

namespace kgrag {

namespace {

std::atomic<long> g_prompt_tokens{0};
std::atomic<long> g_completion_tokens{0};

void add_usage(const ChatUsage& u) {
    g_prompt_tokens.fetch_add(u.prompt_tokens);
    g_completion_tokens.fetch_add(u.completion_tokens);
}

}  // namespace

ChatUsage llm_usage_totals() { return {g_prompt_tokens.load(), g_completion_tokens.load()}; }

void reset_llm_usage_totals() {
    g_prompt_tokens.store(0);
    g_completion_tokens.store(0);
}

HttpLLMClient::HttpLLMClient(HttpClientConfig config) : config_(std::move(config)) {}

ChatResult HttpLLMClient::chat(const std::string& system, const std::string& user,
                               const ChatOptions& options) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key) key = std::getenv("OPENAI_API_KEY");

    nlohmann::json body = {
        {"model", config_.model},
        {"messages",
         {{{"role", "system"}, {"content", system}}, {{"role", "user"}, {"content", user}}}},
        {"temperature", options.temperature},
        {"max_tokens", options.max_tokens},
    };
    std::string payload = body.dump();

    httplib::Headers headers;
    if (key) headers.emplace("Authorization", std::string("Bearer ") + key);

    std::string last_error;
    int backoff = config_.initial_backoff_ms;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
        httplib::Client cli(config_.base_url);
        cli.set_connection_timeout(config_.timeout_s, 0);
        cli.set_read_timeout(config_.timeout_s, 0);
        auto res = cli.Post(config_.path, headers, payload, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;  // transport failure: retry
        }
        if (res->status >= 400 && res->status < 500) {
            raise("llm-refused", "status " + std::to_string(res->status) + ": " + res->body);
        }
        if (res->status < 200 || res->status >= 300) {
            last_error = "status " + std::to_string(res->status);
            continue;  // 5xx: retry
        }
        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            last_error = std::string("bad response body: ") + e.what();
            continue;
        }
        ChatResult out;
        try {
            out.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            last_error = std::string("unexpected response shape: ") + e.what();
            continue;
        }
        try {
            if (reply.contains("usage")) {
                out.usage.prompt_tokens = reply["usage"].value("prompt_tokens", 0L);
                out.usage.completion_tokens = reply["usage"].value("completion_tokens", 0L);
            }
        } catch (const nlohmann::json::exception&) {
            // usage is best-effort metadata; a malformed block is not an error
        }
        add_usage(out.usage);
        return out;
    }
    raise("llm-unavailable", "chat request failed after " + std::to_string(config_.max_attempts) +
                                 " attempts: " + last_error);
}

MockLLMClient::MockLLMClient(std::filesystem::path fixture_dir, bool strict)
    : dir_(std::move(fixture_dir)), strict_(strict) {}

std::string MockLLMClient::prompt_key(const std::string& system, const std::string& user) {
    std::uint64_t h = text::fnv1a64(system + "\x1e" + user);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ChatResult MockLLMClient::chat(const std::string& system, const std::string& user,
                               const ChatOptions& options) {
    (void)options;
    std::string key = prompt_key(system, user);
    std::filesystem::path file = dir_ / (key + ".txt");
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        if (strict_) {
            raise("llm-unavailable", "no mock fixture for prompt hash " + key);
        }
        ChatResult out;
        out.text = "[mock reply " + key + "]";
        out.usage = {static_cast<long>(text::approx_token_count(system) +
                                       text::approx_token_count(user)),
                     static_cast<long>(text::approx_token_count(out.text))};
        add_usage(out.usage);
        return out;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    ChatResult out;
    out.text = buf.str();
    out.usage = {static_cast<long>(text::approx_token_count(system) +
                                   text::approx_token_count(user)),
                 static_cast<long>(text::approx_token_count(out.text))};
    add_usage(out.usage);
    return out;
}

void MockLLMClient::record(const std::string& system, const std::string& user,
                           const std::string& reply) const {
    std::filesystem::create_directories(dir_);
    std::ofstream out(dir_ / (prompt_key(system, user) + ".txt"), std::ios::binary);
    out << reply;
}

}  // namespace kgrag
