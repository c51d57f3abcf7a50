#include <doctest.h>

#include <atomic>
#include <thread>

#if defined(KGRAG_WITH_OPENSSL)
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>

#include "kgrag/errors.hpp"
#include "kgrag/llm_client.hpp"

using namespace kgrag;

namespace {

// Local chat-completions endpoint with a scriptable status sequence.
class FakeServer {
public:
    FakeServer() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
            ++requests_;
            last_body_ = req.body;
            auto it = req.headers.find("Authorization");
            last_auth_ = it == req.headers.end() ? "" : it->second;
            int status = 200;
            if (!statuses_.empty()) {
                status = statuses_.front();
                statuses_.erase(statuses_.begin());
            }
            if (status != 200) {
                res.status = status;
                res.set_content("{\"error\":{\"message\":\"scripted failure\"}}",
                                "application/json");
                return;
            }
            nlohmann::json reply{
                {"choices",
                 {{{"message", {{"role", "assistant"}, {"content", "hello from fake"}}}}}},
                {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 3}}}};
            res.set_content(reply.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~FakeServer() {
        server_.stop();
        thread_.join();
    }

    HttpClientConfig config() const {
        HttpClientConfig cfg;
        cfg.base_url = "http://127.0.0.1:" + std::to_string(port_);
        cfg.initial_backoff_ms = 1;
        cfg.timeout_s = 5;
        return cfg;
    }

    std::vector<int> statuses_;
    std::atomic<int> requests_{0};
    std::string last_body_;
    std::string last_auth_;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace

TEST_CASE("http client round-trips a chat completion") {
    FakeServer server;
    setenv("KGRAG_API_KEY", "test-key-123", 1);
    HttpLLMClient client(server.config());
    ChatOptions options;
    options.temperature = 0.25;
    options.max_tokens = 77;
    ChatResult result = client.chat("sys prompt", "user prompt", options);
    CHECK(result.text == "hello from fake");
    CHECK(result.usage.prompt_tokens == 12);
    CHECK(result.usage.completion_tokens == 3);
    CHECK(server.requests_ == 1);
    CHECK(server.last_auth_ == "Bearer test-key-123");

    auto body = nlohmann::json::parse(server.last_body_);
    CHECK(body["temperature"] == 0.25);
    CHECK(body["max_tokens"] == 77);
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][0]["content"] == "sys prompt");
    CHECK(body["messages"][1]["content"] == "user prompt");
    unsetenv("KGRAG_API_KEY");
}

TEST_CASE("4xx responses are llm-refused and never retried") {
    FakeServer server;
    server.statuses_ = {429};
    HttpLLMClient client(server.config());
    CHECK_THROWS_WITH_AS(client.chat("s", "u", {}), doctest::Contains("llm-refused"), Error);
    CHECK(server.requests_ == 1);
}

TEST_CASE("5xx responses retry with backoff until success") {
    FakeServer server;
    server.statuses_ = {500, 503};
    HttpLLMClient client(server.config());
    ChatResult result = client.chat("s", "u", {});
    CHECK(result.text == "hello from fake");
    CHECK(server.requests_ == 3);
}

TEST_CASE("persistent 5xx exhausts attempts as llm-unavailable") {
    FakeServer server;
    server.statuses_ = {500, 500, 500};
    HttpLLMClient client(server.config());
    CHECK_THROWS_WITH_AS(client.chat("s", "u", {}), doctest::Contains("llm-unavailable"), Error);
    CHECK(server.requests_ == 3);
}

TEST_CASE("transport failure surfaces as llm-unavailable") {
    HttpClientConfig cfg;
    cfg.base_url = "http://127.0.0.1:1";  // nothing listens there
    cfg.initial_backoff_ms = 1;
    cfg.timeout_s = 1;
    HttpLLMClient client(cfg);
    CHECK_THROWS_WITH_AS(client.chat("s", "u", {}), doctest::Contains("llm-unavailable"), Error);
}

TEST_CASE("usage totals accumulate across clients") {
    reset_llm_usage_totals();
    FakeServer server;
    HttpLLMClient client(server.config());
    client.chat("s", "u", {});
    client.chat("s", "u", {});
    ChatUsage totals = llm_usage_totals();
    CHECK(totals.prompt_tokens == 24);
    CHECK(totals.completion_tokens == 6);
    reset_llm_usage_totals();
}
