#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "gptscore/prompt.hpp"
#include "gptscore/types.hpp"

namespace gptscore {

/// One scored token of the target span.
struct TokenScore {
    std::string token;
    double logprob = 0.0;       // natural log
    std::size_t offset = 0;     // byte offset of the token start in the full prompt
};

enum class BackendKind { Http, Fixture, Unigram };

struct RetryPolicy {
    int max_attempts = 3;
    int base_backoff_ms = 250;  // doubled per attempt
};

struct BackendConfig {
    BackendKind kind = BackendKind::Fixture;
    std::string model_id = "fixture";
    std::string endpoint_url;       // Http only, e.g. http://localhost:8080
    int max_parallel = 4;
    RetryPolicy retry;
    std::string cache_dir;          // empty disables caching
    std::string unigram_corpus;     // Unigram only
    std::string fixture_path;       // Fixture only; optional canned responses
    bool fixture_synthesize = true; // Fixture: derive deterministic scores for unknown prompts
};

/// Completions-style echo response before target-span slicing. The
/// first logprob may be missing (the wire format sends null for the
/// first prompt token).
struct EchoResponse {
    std::vector<std::string> tokens;
    std::vector<std::optional<double>> logprobs;
    std::vector<std::size_t> offsets;
};

/// Keep the tokens whose start offset falls inside the target span
/// (offset >= byte-length of the prefix). A token straddling the
/// boundary is an error, as is an empty or non-finite result.
std::vector<TokenScore> slice_target_tokens(const EchoResponse& resp,
                                            const RenderedPrompt& prompt);

class Backend {
public:
    virtual ~Backend() = default;

    /// Per-token logprobs of the target span only.
    std::vector<TokenScore> token_logprobs(const RenderedPrompt& prompt);

    /// Echo logprobs for the whole prompt string.
    virtual EchoResponse fetch(const std::string& full_prompt) = 0;

    virtual const std::string& model_id() const = 0;
};

/// Deterministic offline backend: canned responses by full prompt
/// text, with an optional hash-derived fallback for unknown prompts.
class FixtureBackend : public Backend {
public:
    explicit FixtureBackend(BackendConfig cfg);
    void add_canned(const std::string& prompt, EchoResponse resp);

    EchoResponse fetch(const std::string& full_prompt) override;
    const std::string& model_id() const override { return cfg_.model_id; }

private:
    BackendConfig cfg_;
    std::map<std::string, EchoResponse> canned_;
};

/// Add-one-smoothed unigram model over a fixed corpus; token
/// probabilities are position-independent, which makes it an
/// analytically checkable end-to-end oracle.
class UnigramBackend : public Backend {
public:
    explicit UnigramBackend(BackendConfig cfg);

    EchoResponse fetch(const std::string& full_prompt) override;
    const std::string& model_id() const override { return cfg_.model_id; }

    double token_logprob(const std::string& token) const;

private:
    BackendConfig cfg_;
    std::map<std::string, std::size_t> counts_;
    std::size_t total_ = 0;  // corpus token count N
};

/// OpenAI-compatible completions endpoint with echo logprobs.
/// Requests are retried with exponential backoff; at most
/// `max_parallel` requests are in flight at once.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(BackendConfig cfg);

    EchoResponse fetch(const std::string& full_prompt) override;
    const std::string& model_id() const override { return cfg_.model_id; }

    /// Request body sent for `prompt`; exposed for tests.
    static std::string request_body(const std::string& model_id, const std::string& prompt);

private:
    BackendConfig cfg_;

    class Semaphore;
    std::shared_ptr<Semaphore> slots_;
};

struct CacheStats {
    std::size_t hits = 0;
    std::size_t misses = 0;
};

/// File cache in front of another backend. One JSON file per key;
/// entries are immutable once written and checksummed on read.
class CachedBackend : public Backend {
public:
    CachedBackend(std::shared_ptr<Backend> inner, std::string cache_dir);

    EchoResponse fetch(const std::string& full_prompt) override;
    const std::string& model_id() const override { return inner_->model_id(); }

    CacheStats stats() const;
    static std::string cache_key(const std::string& model_id, const std::string& prompt);

private:
    std::shared_ptr<Backend> inner_;
    std::string dir_;
    mutable std::mutex mu_;
    CacheStats stats_;

    std::optional<EchoResponse> read_entry(const std::string& key,
                                           const std::string& prompt_sha) const;
    void write_entry(const std::string& key, const std::string& prompt_sha,
                     const EchoResponse& resp) const;
};

/// Build a backend from config, wrapping it in a cache when
/// cache_dir is set.
std::shared_ptr<Backend> make_backend(const BackendConfig& cfg);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& data);

/// Tokenize on Unicode whitespace, returning (token, byte offset).
std::vector<std::pair<std::string, std::size_t>> whitespace_tokenize(const std::string& text);

}  // namespace gptscore
