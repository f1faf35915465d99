#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "uceval/attacks.hpp"
#include "uceval/corpus.hpp"

namespace uceval {

enum class BackendKind { http_chat, simulated };

// How the model exposes its chain: a toggleable <think> block, a dedicated
// reasoning channel, or inline prose terminated by "Final answer: X".
enum class Surface {
    think_toggle_on,
    think_toggle_off,
    reasoning_channel,
    inline_cot,
};

std::string to_string(Surface s);
Surface surface_from_string(const std::string& s);

struct Decoding {
    double temperature = 0.0;
    int max_tokens = 2048;
    uint64_t seed = 0;
};

struct RetryPolicy {
    int max_attempts = 3;
    int backoff_ms = 250;
};

struct BackendConfig {
    BackendKind kind = BackendKind::simulated;
    std::string endpoint;  // http_chat only
    std::string model_name;
    Surface surface = Surface::think_toggle_on;
    Decoding decoding;
    RetryPolicy retry;
    // Name of the environment variable holding the API credential.
    std::string api_key_env = "UCEVAL_API_KEY";
};

struct Usage {
    int64_t prompt_tokens = 0;
    int64_t completion_tokens = 0;
};

struct ModelReply {
    std::string raw;
    std::string trace;  // empty when the surface yields no chain
    std::string answer_text;
    Usage usage;
};

struct ChatMessage {
    std::string role;  // "user" | "assistant" | "system"
    std::string content;
};

// Extra information the driver knows about the turn being requested. The
// http backend ignores it; the simulated backend scripts its reply from it.
struct TurnContext {
    const Question* question = nullptr;
    int round = -1;
    const AttackTemplate* attack = nullptr;  // null at round 0
    const WrongAnswerPool* pool = nullptr;
    bool reconcile_turn = false;
    char reconcile_anchor = 0;
    int probe_variant = -1;  // PrefixVariant ordinal during slot probing
};

struct SurfaceSplit {
    std::string trace;
    std::string answer_text;
    bool unterminated_think = false;
};

// Splits a raw completion into (trace, answer_text) under the surface's
// framing rules. Total: inputs that carry no recognizable framing come back
// with an empty trace and the full text as answer. An unterminated think
// block is recoverable: trace = block content, answer empty, flag set.
SurfaceSplit extract_reasoning_surface(const std::string& raw, Surface surface);

// Markers for Surface::reasoning_channel. The same strings are shipped in
// data/reasoning_channel.grammar so fixtures and replications can be built
// without reading this header.
struct ChannelMarkers {
    static constexpr const char* analysis_start = "<|channel|>analysis<|message|>";
    static constexpr const char* final_start = "<|channel|>final<|message|>";
    static constexpr const char* segment_end = "<|end|>";
};

// Folds a raw token->mass map into per-letter probabilities over exactly the
// requested letters: bare letter and single-leading-space variants are summed
// per letter, then the vector is renormalized to sum to 1.
std::map<char, double> fold_letter_mass(
    const std::map<std::string, double>& token_mass,
    const std::vector<char>& letters);

// A chat backend handle. Shareable across threads; calls within one
// trajectory must stay sequential (history dependency).
class ChatBackend {
public:
    virtual ~ChatBackend() = default;

    // One dialogue turn. History alternates roles; user_msg is the new turn.
    // Throws transport_error when retries are exhausted, protocol_error when
    // the response body does not parse.
    virtual ModelReply chat_turn(const std::vector<ChatMessage>& history,
                                 const std::string& user_msg,
                                 const TurnContext* ctx = nullptr) = 0;

    virtual bool supports_logprobs() const { return false; }

    // Next-token distribution over the given letters at the end of prefix.
    // Throws capability_error unless supports_logprobs().
    virtual std::map<char, double> next_token_letter_distribution(
        const std::string& prefix, const std::vector<char>& letters,
        const TurnContext* ctx = nullptr);

    virtual const BackendConfig& config() const = 0;
};

// OpenAI-compatible chat-completions client over HTTP.
std::unique_ptr<ChatBackend> make_http_backend(const BackendConfig& cfg);

}  // namespace uceval
