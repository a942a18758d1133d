#include "langnav/lm_gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "langnav/errors.hpp"
#include "langnav/rng.hpp"

namespace langnav {

void validate_request(const CompletionRequest& request) {
    if (request.max_tokens < 1) throw GatewayError("completion: max_tokens must be >= 1");
    if (request.temperature < 0) throw GatewayError("completion: temperature must be >= 0");
    if (request.top_p <= 0 || request.top_p > 1)
        throw GatewayError("completion: top_p must be in (0,1]");
}

void validate_request(const EmbeddingRequest& request) {
    if (request.texts.empty()) throw GatewayError("embedding: empty input list");
    for (const auto& t : request.texts)
        if (t.empty()) throw GatewayError("embedding: empty input text");
}

void l2_normalize(std::vector<double>& v) {
    double sq = 0;
    for (double x : v) sq += x * x;
    if (sq <= 0) {
        if (!v.empty()) v[0] = 1.0;
        return;
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
}

std::vector<double> hash_embedding(std::string_view text, int dim) {
    Rng rng(fnv1a(text));
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (double& x : v) x = rng.next_unit() * 2.0 - 1.0;
    l2_normalize(v);
    return v;
}

namespace {

std::string truncate_at_stop(std::string text, const std::vector<std::string>& stops) {
    std::size_t cut = std::string::npos;
    for (const auto& s : stops) {
        if (s.empty()) continue;
        const std::size_t pos = text.find(s);
        if (pos < cut) cut = pos;
    }
    if (cut != std::string::npos) text.resize(cut);
    return text;
}

// Splits "http://host:port/prefix" into origin and path prefix.
void split_base_url(const std::string& base, std::string& origin, std::string& prefix) {
    const std::size_t scheme = base.find("://");
    const std::size_t slash = base.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (slash == std::string::npos) {
        origin = base;
        prefix.clear();
    } else {
        origin = base.substr(0, slash);
        prefix = base.substr(slash);
        while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    }
}

Transport make_http_transport(const HttpGatewayOptions& options) {
    std::string origin, prefix;
    split_base_url(options.base_url, origin, prefix);
    const std::string key = options.api_key;
    const int timeout = options.timeout_seconds;
    return [origin, prefix, key, timeout](const std::string& path,
                                          const std::string& body) -> HttpResponse {
        httplib::Client client(origin);
        client.set_connection_timeout(timeout, 0);
        client.set_read_timeout(timeout, 0);
        client.set_write_timeout(timeout, 0);
        httplib::Headers headers;
        if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);
        auto res = client.Post(prefix + path, headers, body, "application/json");
        if (!res) return {0, "", true};
        return {res->status, res->body, false};
    };
}

class InFlightGuard {
public:
    InFlightGuard(std::mutex& mutex, std::condition_variable& cv, int& count, int limit)
        : mutex_(mutex), cv_(cv), count_(count) {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return count_ < limit; });
        ++count_;
    }
    ~InFlightGuard() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            --count_;
        }
        cv_.notify_one();
    }

private:
    std::mutex& mutex_;
    std::condition_variable& cv_;
    int& count_;
};

}  // namespace

HttpGateway::HttpGateway(HttpGatewayOptions options) : options_(std::move(options)) {
    if (!options_.transport) {
        if (options_.base_url.empty())
            throw GatewayError("gateway: base URL not configured");
        options_.transport = make_http_transport(options_);
    }
    if (!options_.sleep_fn)
        options_.sleep_fn = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (options_.max_attempts < 1) options_.max_attempts = 1;
    if (options_.max_in_flight < 1) options_.max_in_flight = 1;
}

HttpGatewayOptions HttpGateway::options_from_env() {
    HttpGatewayOptions options;
    const char* base = std::getenv("LM_BASE_URL");
    const char* key = std::getenv("LM_API_KEY");
    if (!base || !*base) throw GatewayError("gateway: LM_BASE_URL is not set");
    options.base_url = base;
    if (key) options.api_key = key;
    return options;
}

std::string HttpGateway::post_with_retry(const std::string& path, const std::string& body) {
    InFlightGuard guard(limiter_mutex_, limiter_cv_, in_flight_, options_.max_in_flight);
    std::string last_error;
    for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
        if (attempt > 1)
            options_.sleep_fn(std::chrono::milliseconds(1000) * (1 << (attempt - 2)));
        HttpResponse res = options_.transport(path, body);
        if (res.transport_error) {
            last_error = "transport error";
            continue;
        }
        if (res.status >= 200 && res.status < 300) return res.body;
        last_error = "HTTP " + std::to_string(res.status);
        const bool retryable = res.status == 429 || res.status >= 500;
        if (!retryable) break;
    }
    throw GatewayError("gateway: POST " + path + " failed: " + last_error);
}

std::string HttpGateway::complete(const CompletionRequest& request) {
    validate_request(request);
    nlohmann::ordered_json body;
    body["prompt"] = request.prompt;
    body["max_tokens"] = request.max_tokens;
    body["temperature"] = request.temperature;
    body["top_p"] = request.top_p;
    if (!request.stop_sequences.empty()) body["stop"] = request.stop_sequences;
    const std::string raw = post_with_retry("/completions", body.dump());
    std::string text;
    try {
        const auto doc = nlohmann::json::parse(raw);
        text = doc.at("choices").at(0).at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw GatewayError(std::string("gateway: bad completion response: ") + e.what());
    }
    text = truncate_at_stop(std::move(text), request.stop_sequences);
    if (text.empty()) throw GatewayError("gateway: empty completion");
    return text;
}

std::vector<std::vector<double>> HttpGateway::embed(const EmbeddingRequest& request) {
    validate_request(request);
    nlohmann::ordered_json body;
    body["input"] = request.texts;
    const std::string raw = post_with_retry("/embeddings", body.dump());
    std::vector<std::vector<double>> out;
    try {
        const auto doc = nlohmann::json::parse(raw);
        for (const auto& item : doc.at("data"))
            out.push_back(item.at("embedding").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw GatewayError(std::string("gateway: bad embedding response: ") + e.what());
    }
    if (out.size() != request.texts.size())
        throw GatewayError("gateway: embedding count mismatch");
    for (auto& v : out) l2_normalize(v);
    return out;
}

void ScriptedGateway::push_completion(std::string text) {
    std::lock_guard<std::mutex> lock(mutex_);
    completions_.push_back(std::move(text));
}

void ScriptedGateway::push_embedding(std::vector<std::vector<double>> vectors) {
    std::lock_guard<std::mutex> lock(mutex_);
    embeddings_.push_back(std::move(vectors));
}

std::string ScriptedGateway::complete(const CompletionRequest& request) {
    validate_request(request);
    std::lock_guard<std::mutex> lock(mutex_);
    completion_log_.push_back(request);
    if (completions_.empty()) throw GatewayError("scripted gateway: no completion scripted");
    std::string text = truncate_at_stop(std::move(completions_.front()), request.stop_sequences);
    completions_.pop_front();
    if (text.empty()) throw GatewayError("gateway: empty completion");
    return text;
}

std::vector<std::vector<double>> ScriptedGateway::embed(const EmbeddingRequest& request) {
    validate_request(request);
    std::lock_guard<std::mutex> lock(mutex_);
    if (!embeddings_.empty()) {
        auto out = std::move(embeddings_.front());
        embeddings_.pop_front();
        for (auto& v : out) l2_normalize(v);
        return out;
    }
    std::vector<std::vector<double>> out;
    for (const auto& t : request.texts) out.push_back(hash_embedding(t));
    return out;
}

namespace {

const char* const kRooms[] = {"kitchen",     "living room", "bedroom",  "bathroom",
                              "dining room", "hallway",     "office",   "laundry room",
                              "garage",      "closet",      "foyer",    "sun room"};
const char* const kLandmarks[] = {"couch",        "refrigerator", "potted plant", "staircase",
                                  "dining table", "bookshelf",    "fireplace",    "piano",
                                  "washing machine", "mirror",    "armchair",     "lamp"};
const char* const kCaptions[] = {
    "a kitchen with a stove, sink, and refrigerator",
    "a living room filled with furniture and a fire place",
    "a hallway leading to a kitchen and living room",
    "a bedroom with a bed and a mirror on the wall",
    "a dining room table with a bowl of fruit on it",
    "a bathroom with a sink and a large mirror",
    "a room with a staircase and a potted plant",
    "an office with a desk, chair, and bookshelf",
    "a laundry room with a washer and dryer",
    "a living room with a couch and a table",
};
const char* const kPhrases[] = {"straight ahead", "30 degree left",  "30 degree right",
                                "60 degree left", "90 degree right", "back"};

template <typename T, std::size_t N>
const T& pick(const T (&arr)[N], Rng& rng) {
    return arr[rng.next_below(N)];
}

std::string synth_instruction_line(uint64_t seed, uint64_t ordinal) {
    Rng rng(derive_seed(seed, 0x1157, ordinal));
    std::string s = "- Walk past the ";
    s += pick(kLandmarks, rng);
    s += " and into the ";
    s += pick(kRooms, rng);
    s += ". Take " + std::to_string(ordinal + 1) + " more steps, then stop near the ";
    s += pick(kLandmarks, rng);
    s += ".";
    return s;
}

std::string synth_trajectory(uint64_t seed, const std::string& prompt) {
    Rng rng(derive_seed(seed, 0x7e47, fnv1a(prompt)));
    const int n_steps = 5 + static_cast<int>(rng.next_below(3));
    std::string out = "### Trajectory:\n";
    for (int t = 1; t <= n_steps; ++t) {
        out += "Step " + std::to_string(t) + ":\n\n";
        const int n_blocks = 2 + static_cast<int>(rng.next_below(2));
        std::vector<std::string> captions;
        std::vector<std::string> phrases;
        for (int b = 0; b < n_blocks; ++b) {
            std::string caption;
            do {
                caption = pick(kCaptions, rng);
            } while (std::find(captions.begin(), captions.end(), caption) != captions.end());
            std::string phrase;
            do {
                phrase = kPhrases[b == 0 ? 0 : rng.next_below(6)];
            } while (std::find(phrases.begin(), phrases.end(), phrase) != phrases.end());
            captions.push_back(caption);
            phrases.push_back(phrase);
        }
        for (int b = 0; b < n_blocks; ++b)
            out += "To your " + phrases[static_cast<std::size_t>(b)] + " is,\n" +
                   captions[static_cast<std::size_t>(b)] + "\n\n";
        out += "You chose:\n";
        if (t == n_steps)
            out += "stop\n";
        else
            out += captions[rng.next_below(captions.size())] + "\n";
        if (t < n_steps) out += "\n";
    }
    return out;
}

}  // namespace

std::string TemplateGateway::complete(const CompletionRequest& request) {
    validate_request(request);
    if (request.prompt.find("write 10 more instructions") != std::string::npos) {
        uint64_t call;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            call = instruction_calls_++;
        }
        std::string out;
        for (uint64_t i = 0; i < 10; ++i) {
            out += synth_instruction_line(seed_, call * 10 + i);
            out += "\n";
        }
        return out;
    }
    if (request.prompt.find("generate a trajectory of 5-7 steps") != std::string::npos)
        return synth_trajectory(seed_, request.prompt);
    // Navigation cue: echo the caption of the last observation block.
    const std::size_t pos = request.prompt.rfind(" is,\n");
    if (pos != std::string::npos) {
        const std::size_t start = pos + 5;
        const std::size_t end = request.prompt.find('\n', start);
        return request.prompt.substr(start, end == std::string::npos ? end : end - start);
    }
    return "stop";
}

std::vector<std::vector<double>> TemplateGateway::embed(const EmbeddingRequest& request) {
    validate_request(request);
    std::vector<std::vector<double>> out;
    for (const auto& t : request.texts) out.push_back(hash_embedding(t));
    return out;
}

}  // namespace langnav
