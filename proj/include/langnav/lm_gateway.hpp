#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace langnav {

struct CompletionRequest {
    std::string prompt;
    int max_tokens = 256;
    double temperature = 0;
    double top_p = 1;
    std::vector<std::string> stop_sequences;
};

struct EmbeddingRequest {
    std::vector<std::string> texts;  // non-empty, each text non-empty
};

class Gateway {
public:
    virtual ~Gateway() = default;
    // First completion's text, truncated at the first stop sequence.
    virtual std::string complete(const CompletionRequest& request) = 0;
    // One L2-normalized vector per input text.
    virtual std::vector<std::vector<double>> embed(const EmbeddingRequest& request) = 0;
};

void validate_request(const CompletionRequest& request);
void validate_request(const EmbeddingRequest& request);
void l2_normalize(std::vector<double>& v);

// Deterministic mock embedding: a pure function of the text, unit norm.
std::vector<double> hash_embedding(std::string_view text, int dim = 32);

// --- HTTP client ---

struct HttpResponse {
    int status = 0;
    std::string body;
    bool transport_error = false;
};

// (path, json body) -> response. Injectable for tests; the default uses a
// real HTTP client against base_url.
using Transport = std::function<HttpResponse(const std::string& path, const std::string& body)>;

struct HttpGatewayOptions {
    std::string base_url;  // e.g. "http://localhost:8080/v1"
    std::string api_key;
    int max_attempts = 3;
    int max_in_flight = 4;
    int timeout_seconds = 60;
    Transport transport;                                       // optional override
    std::function<void(std::chrono::milliseconds)> sleep_fn;   // optional override
};

// POST {base}/completions and {base}/embeddings in the de-facto JSON wire
// format. Retries 429/5xx/transport errors with backoff 1s, 2s, 4s; other
// 4xx fail immediately. The credential never appears in error messages.
class HttpGateway : public Gateway {
public:
    explicit HttpGateway(HttpGatewayOptions options);
    // Reads LM_BASE_URL and LM_API_KEY; throws GatewayError when unset.
    static HttpGatewayOptions options_from_env();

    std::string complete(const CompletionRequest& request) override;
    std::vector<std::vector<double>> embed(const EmbeddingRequest& request) override;

private:
    HttpGatewayOptions options_;
    std::mutex limiter_mutex_;
    std::condition_variable limiter_cv_;
    int in_flight_ = 0;

    std::string post_with_retry(const std::string& path, const std::string& body);
};

// Thread-safe FIFO mock: replies are scripted in advance.
class ScriptedGateway : public Gateway {
public:
    void push_completion(std::string text);
    void push_embedding(std::vector<std::vector<double>> vectors);

    std::string complete(const CompletionRequest& request) override;
    // Falls back to hash embeddings when nothing is scripted.
    std::vector<std::vector<double>> embed(const EmbeddingRequest& request) override;

    const std::vector<CompletionRequest>& completion_log() const { return completion_log_; }

private:
    std::mutex mutex_;
    std::deque<std::string> completions_;
    std::deque<std::vector<std::vector<double>>> embeddings_;
    std::vector<CompletionRequest> completion_log_;
};

// Deterministic procedural mock: recognizes the synthesis prompts and emits
// well-formed replies derived from the prompt text, so full pipeline runs are
// reproducible without a network. Embeddings are hash embeddings.
class TemplateGateway : public Gateway {
public:
    explicit TemplateGateway(uint64_t seed = 0) : seed_(seed) {}

    std::string complete(const CompletionRequest& request) override;
    std::vector<std::vector<double>> embed(const EmbeddingRequest& request) override;

private:
    uint64_t seed_;
    std::mutex mutex_;
    uint64_t instruction_calls_ = 0;
};

}  // namespace langnav
