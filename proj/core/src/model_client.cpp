#include "uceval/model_client.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "uceval/errors.hpp"

namespace uceval {

using nlohmann::json;

std::string to_string(Surface s) {
    switch (s) {
        case Surface::think_toggle_on: return "think_toggle_on";
        case Surface::think_toggle_off: return "think_toggle_off";
        case Surface::reasoning_channel: return "reasoning_channel";
        case Surface::inline_cot: return "inline_cot";
    }
    return "unknown";
}

Surface surface_from_string(const std::string& s) {
    if (s == "think_toggle_on") return Surface::think_toggle_on;
    if (s == "think_toggle_off") return Surface::think_toggle_off;
    if (s == "reasoning_channel") return Surface::reasoning_channel;
    if (s == "inline_cot") return Surface::inline_cot;
    throw config_error("unknown reasoning surface: " + s);
}

namespace {

SurfaceSplit split_think(const std::string& raw) {
    SurfaceSplit out;
    const std::string open = "<think>", close = "</think>";
    size_t start = raw.find(open);
    if (start == std::string::npos) {
        out.answer_text = raw;
        return out;
    }
    size_t body = start + open.size();
    size_t end = raw.find(close, body);
    if (end == std::string::npos) {
        out.trace = raw.substr(body);
        out.unterminated_think = true;
        return out;
    }
    out.trace = raw.substr(body, end - body);
    out.answer_text = raw.substr(0, start) + raw.substr(end + close.size());
    return out;
}

SurfaceSplit split_channel(const std::string& raw) {
    SurfaceSplit out;
    const std::string channel = "<|channel|>", message = "<|message|>",
                      end_mark = ChannelMarkers::segment_end;
    size_t at = 0;
    bool any = false;
    while (true) {
        size_t seg = raw.find(channel, at);
        if (seg == std::string::npos) break;
        size_t name_start = seg + channel.size();
        size_t msg = raw.find(message, name_start);
        if (msg == std::string::npos) break;
        std::string name = raw.substr(name_start, msg - name_start);
        size_t content_start = msg + message.size();
        size_t content_end = raw.find(end_mark, content_start);
        std::string content =
            (content_end == std::string::npos)
                ? raw.substr(content_start)
                : raw.substr(content_start, content_end - content_start);
        if (name == "analysis") out.trace += content;
        else if (name == "final") out.answer_text += content;
        any = true;
        if (content_end == std::string::npos) break;
        at = content_end + end_mark.size();
    }
    if (!any) out.answer_text = raw;
    return out;
}

SurfaceSplit split_inline(const std::string& raw) {
    SurfaceSplit out;
    const std::string marker = "Final answer:";
    size_t at = raw.rfind(marker);
    if (at == std::string::npos) {
        out.answer_text = raw;
        return out;
    }
    out.trace = raw.substr(0, at);
    out.answer_text = raw.substr(at);
    return out;
}

}  // namespace

SurfaceSplit extract_reasoning_surface(const std::string& raw, Surface surface) {
    switch (surface) {
        case Surface::think_toggle_on: return split_think(raw);
        case Surface::think_toggle_off: {
            SurfaceSplit out;
            out.answer_text = raw;
            return out;
        }
        case Surface::reasoning_channel: return split_channel(raw);
        case Surface::inline_cot: return split_inline(raw);
    }
    SurfaceSplit out;
    out.answer_text = raw;
    return out;
}

std::map<char, double> fold_letter_mass(
    const std::map<std::string, double>& token_mass,
    const std::vector<char>& letters) {
    std::map<char, double> out;
    double total = 0.0;
    for (char c : letters) {
        double mass = 0.0;
        auto bare = token_mass.find(std::string(1, c));
        if (bare != token_mass.end()) mass += bare->second;
        auto spaced = token_mass.find(std::string(" ") + c);
        if (spaced != token_mass.end()) mass += spaced->second;
        out[c] = mass;
        total += mass;
    }
    if (total <= 0.0)
        throw protocol_error("no probability mass on any valid letter at the answer slot");
    for (auto& [c, mass] : out) mass /= total;
    return out;
}

std::map<char, double> ChatBackend::next_token_letter_distribution(
    const std::string&, const std::vector<char>&, const TurnContext*) {
    throw capability_error("backend does not expose next-token logprobs");
}

namespace {

class HttpBackend : public ChatBackend {
public:
    explicit HttpBackend(const BackendConfig& cfg) : cfg_(cfg) {
        if (cfg_.endpoint.empty())
            throw config_error("http backend needs an endpoint");
        const char* key = std::getenv(cfg_.api_key_env.c_str());
        if (key != nullptr) api_key_ = key;
    }

    ModelReply chat_turn(const std::vector<ChatMessage>& history,
                         const std::string& user_msg,
                         const TurnContext*) override {
        json messages = json::array();
        for (const auto& m : history)
            messages.push_back({{"role", m.role}, {"content", m.content}});
        messages.push_back({{"role", "user"}, {"content", user_msg}});

        json body = {
            {"model", cfg_.model_name},
            {"messages", messages},
            {"temperature", cfg_.decoding.temperature},
            {"max_tokens", cfg_.decoding.max_tokens},
        };
        if (cfg_.decoding.seed != 0) body["seed"] = cfg_.decoding.seed;
        if (cfg_.surface == Surface::think_toggle_on ||
            cfg_.surface == Surface::think_toggle_off) {
            body["chat_template_kwargs"] = {
                {"enable_thinking", cfg_.surface == Surface::think_toggle_on}};
        }

        json resp = post_json("/v1/chat/completions", body);
        ModelReply reply;
        try {
            const json& choice = resp.at("choices").at(0);
            const json& msg = choice.at("message");
            std::string content = msg.value("content", "");
            if (msg.contains("reasoning_content") &&
                msg.at("reasoning_content").is_string() &&
                !msg.at("reasoning_content").get<std::string>().empty()) {
                // Providers that ship the chain out-of-band: refold it into
                // the think framing so raw always reconstructs both parts.
                reply.trace = msg.at("reasoning_content").get<std::string>();
                reply.answer_text = content;
                reply.raw = "<think>" + reply.trace + "</think>" + content;
            } else {
                reply.raw = content;
                SurfaceSplit split = extract_reasoning_surface(content, cfg_.surface);
                reply.trace = split.trace;
                reply.answer_text = split.answer_text;
            }
            if (resp.contains("usage")) {
                reply.usage.prompt_tokens = resp["usage"].value("prompt_tokens", 0);
                reply.usage.completion_tokens =
                    resp["usage"].value("completion_tokens", 0);
            }
        } catch (const json::exception& e) {
            throw protocol_error(std::string("malformed chat completion: ") + e.what());
        }
        return reply;
    }

    bool supports_logprobs() const override { return true; }

    std::map<char, double> next_token_letter_distribution(
        const std::string& prefix, const std::vector<char>& letters,
        const TurnContext*) override {
        json body = {
            {"model", cfg_.model_name}, {"prompt", prefix}, {"max_tokens", 1},
            {"temperature", 0},         {"logprobs", 20},   {"echo", false},
        };
        json resp = post_json("/v1/completions", body, /*probe=*/true);
        std::map<std::string, double> mass;
        try {
            const json& top =
                resp.at("choices").at(0).at("logprobs").at("top_logprobs").at(0);
            for (auto it = top.begin(); it != top.end(); ++it)
                mass[it.key()] = std::exp(it.value().get<double>());
        } catch (const json::exception& e) {
            throw capability_error(std::string("backend returned no usable logprobs: ") +
                                   e.what());
        }
        return fold_letter_mass(mass, letters);
    }

    const BackendConfig& config() const override { return cfg_; }

private:
    json post_json(const std::string& path, const json& body, bool probe = false) {
        int last_status = 0;
        std::string last_error;
        for (int attempt = 0; attempt < cfg_.retry.max_attempts; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(cfg_.retry.backoff_ms * attempt));
            }
            httplib::Client client(cfg_.endpoint);
            client.set_read_timeout(120, 0);
            client.set_write_timeout(120, 0);
            httplib::Headers headers;
            if (!api_key_.empty())
                headers.emplace("Authorization", "Bearer " + api_key_);
            auto res = client.Post(path, headers, body.dump(), "application/json");
            if (!res) {
                last_error = "connection failure";
                continue;
            }
            last_status = res->status;
            if (res->status == 429 || res->status >= 500) {
                last_error = "status " + std::to_string(res->status);
                continue;
            }
            if (probe && (res->status == 404 || res->status == 400))
                throw capability_error("probe endpoint rejected: status " +
                                       std::to_string(res->status));
            if (res->status < 200 || res->status >= 300)
                throw transport_error("request failed: status " +
                                          std::to_string(res->status),
                                      res->status);
            try {
                return json::parse(res->body);
            } catch (const json::exception& e) {
                throw protocol_error(std::string("unparsable response body: ") +
                                     e.what());
            }
        }
        throw transport_error("retries exhausted: " + last_error, last_status);
    }

    BackendConfig cfg_;
    std::string api_key_;
};

}  // namespace

std::unique_ptr<ChatBackend> make_http_backend(const BackendConfig& cfg) {
    return std::make_unique<HttpBackend>(cfg);
}

}  // namespace uceval
