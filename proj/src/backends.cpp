#include "gptscore/backends.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <openssl/evp.h>
#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

namespace gptscore {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

namespace {

bool is_unicode_space(char32_t cp) {
    switch (cp) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
        case 0x0085: case 0x00A0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

// Decode one UTF-8 codepoint at position i; advances i. Invalid bytes
// are passed through as single non-space characters.
char32_t decode_utf8(const std::string& s, std::size_t& i) {
    unsigned char b = static_cast<unsigned char>(s[i]);
    std::size_t len = b < 0x80 ? 1 : (b >> 5) == 0x6 ? 2 : (b >> 4) == 0xE ? 3 : (b >> 3) == 0x1E ? 4 : 1;
    if (i + len > s.size()) len = 1;
    char32_t cp = 0;
    switch (len) {
        case 1: cp = b; break;
        case 2: cp = b & 0x1F; break;
        case 3: cp = b & 0x0F; break;
        case 4: cp = b & 0x07; break;
    }
    for (std::size_t k = 1; k < len; ++k)
        cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    i += len;
    return cp;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string strip_ws(const std::string& s) {
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t start = i;
        char32_t cp = decode_utf8(s, i);
        if (!is_unicode_space(cp)) out += s.substr(start, i - start);
    }
    return out;
}

}  // namespace

std::vector<std::pair<std::string, std::size_t>> whitespace_tokenize(const std::string& text) {
    std::vector<std::pair<std::string, std::size_t>> out;
    std::size_t i = 0;
    std::size_t tok_start = std::string::npos;
    while (i < text.size()) {
        std::size_t pos = i;
        char32_t cp = decode_utf8(text, i);
        if (is_unicode_space(cp)) {
            if (tok_start != std::string::npos) {
                out.emplace_back(text.substr(tok_start, pos - tok_start), tok_start);
                tok_start = std::string::npos;
            }
        } else if (tok_start == std::string::npos) {
            tok_start = pos;
        }
    }
    if (tok_start != std::string::npos)
        out.emplace_back(text.substr(tok_start), tok_start);
    return out;
}

std::vector<TokenScore> slice_target_tokens(const EchoResponse& resp,
                                            const RenderedPrompt& prompt) {
    if (prompt.target.empty()) throw UsageError("prompt target is empty");
    if (resp.tokens.size() != resp.logprobs.size() || resp.tokens.size() != resp.offsets.size())
        throw BackendError("echo response arrays have mismatched lengths");

    const std::size_t boundary = prompt.prefix.size();
    const std::string full = prompt.full();

    std::vector<TokenScore> out;
    std::string concat;
    for (std::size_t i = 0; i < resp.tokens.size(); ++i) {
        const std::size_t off = resp.offsets[i];
        if (i > 0 && off <= resp.offsets[i - 1])
            throw BackendError("echo response offsets are not strictly increasing");
        const std::size_t end = off + resp.tokens[i].size();
        if (off < boundary) {
            if (end > boundary)
                throw BackendError("token '" + resp.tokens[i] +
                                   "' straddles the prefix/target boundary at byte " +
                                   std::to_string(boundary));
            continue;  // prefix token
        }
        if (!resp.logprobs[i].has_value())
            throw BackendError("missing logprob for target token '" + resp.tokens[i] + "'");
        const double lp = *resp.logprobs[i];
        if (!std::isfinite(lp))
            throw BackendError("non-finite logprob for target token '" + resp.tokens[i] + "'");
        if (full.compare(off, resp.tokens[i].size(), resp.tokens[i]) != 0)
            throw BackendError("token text does not match prompt at offset " +
                               std::to_string(off));
        concat += resp.tokens[i];
        out.push_back(TokenScore{resp.tokens[i], lp, off});
    }
    if (out.empty())
        throw BackendError("target span resolved to zero tokens (boundary at byte " +
                           std::to_string(boundary) + ")");
    // Byte-exact coverage when the backend preserves whitespace tokens;
    // whitespace-splitting backends drop the separators.
    if (concat != prompt.target && strip_ws(concat) != strip_ws(prompt.target))
        throw BackendError("target tokens do not reconstruct the target text");
    return out;
}

std::vector<TokenScore> Backend::token_logprobs(const RenderedPrompt& prompt) {
    return slice_target_tokens(fetch(prompt.full()), prompt);
}

// --- Fixture ---------------------------------------------------------

FixtureBackend::FixtureBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.fixture_path.empty()) return;
    std::ifstream in(cfg_.fixture_path, std::ios::binary);
    if (!in) throw DataError("cannot open fixture file: " + cfg_.fixture_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        EchoResponse r;
        r.tokens = j.at("tokens").get<std::vector<std::string>>();
        for (const auto& v : j.at("token_logprobs"))
            r.logprobs.push_back(v.is_null() ? std::nullopt
                                             : std::optional<double>(v.get<double>()));
        r.offsets = j.at("text_offset").get<std::vector<std::size_t>>();
        canned_.emplace(j.at("prompt").get<std::string>(), std::move(r));
    }
}

void FixtureBackend::add_canned(const std::string& prompt, EchoResponse resp) {
    canned_[prompt] = std::move(resp);
}

EchoResponse FixtureBackend::fetch(const std::string& full_prompt) {
    if (auto it = canned_.find(full_prompt); it != canned_.end()) return it->second;
    if (!cfg_.fixture_synthesize)
        throw BackendError("no canned fixture response for prompt (" +
                           std::to_string(full_prompt.size()) + " bytes)");
    // Hash-derived logprob per token: deterministic, negative, pure.
    EchoResponse r;
    for (const auto& [tok, off] : whitespace_tokenize(full_prompt)) {
        r.tokens.push_back(tok);
        r.logprobs.push_back(-1.0 - static_cast<double>(fnv1a64(tok) % 997) / 997.0);
        r.offsets.push_back(off);
    }
    if (r.tokens.empty()) throw BackendError("fixture backend got an all-whitespace prompt");
    return r;
}

// --- Unigram ---------------------------------------------------------

UnigramBackend::UnigramBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
    for (const auto& [tok, off] : whitespace_tokenize(cfg_.unigram_corpus)) {
        ++counts_[tok];
        ++total_;
    }
    if (total_ == 0) throw DataError("unigram corpus is empty");
}

double UnigramBackend::token_logprob(const std::string& token) const {
    // Add-one smoothing over the corpus vocabulary; unseen tokens get
    // the unknown bucket's 1/(N+V).
    auto it = counts_.find(token);
    const double count = it == counts_.end() ? 0.0 : static_cast<double>(it->second);
    return std::log((count + 1.0) / static_cast<double>(total_ + counts_.size()));
}

EchoResponse UnigramBackend::fetch(const std::string& full_prompt) {
    EchoResponse r;
    for (const auto& [tok, off] : whitespace_tokenize(full_prompt)) {
        r.tokens.push_back(tok);
        r.logprobs.push_back(token_logprob(tok));
        r.offsets.push_back(off);
    }
    if (r.tokens.empty()) throw BackendError("unigram backend got an all-whitespace prompt");
    return r;
}

// --- Http ------------------------------------------------------------

class HttpBackend::Semaphore {
public:
    explicit Semaphore(int slots) : slots_(slots) {}
    void acquire() {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [this] { return slots_ > 0; });
        --slots_;
    }
    void release() {
        {
            std::lock_guard lk(mu_);
            ++slots_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int slots_;
};

HttpBackend::HttpBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.endpoint_url.empty()) throw UsageError("http backend requires an endpoint URL");
    if (cfg_.max_parallel < 1) throw UsageError("max_parallel must be >= 1");
    if (cfg_.retry.max_attempts < 1) throw UsageError("retry.max_attempts must be >= 1");
    slots_ = std::make_shared<Semaphore>(cfg_.max_parallel);
}

std::string HttpBackend::request_body(const std::string& model_id, const std::string& prompt) {
    json body;
    body["model"] = model_id;
    body["prompt"] = prompt;
    body["max_tokens"] = 0;
    body["echo"] = true;
    body["logprobs"] = 1;
    body["temperature"] = 0;
    return body.dump();
}

EchoResponse HttpBackend::fetch(const std::string& full_prompt) {
    slots_->acquire();
    struct Release {
        Semaphore* s;
        ~Release() { s->release(); }
    } release{slots_.get()};

    httplib::Client client(cfg_.endpoint_url);
    client.set_connection_timeout(30);
    client.set_read_timeout(300);
    httplib::Headers headers;
    if (const char* key = std::getenv("GPTSCORE_API_KEY"))
        headers.emplace("Authorization", std::string("Bearer ") + key);

    const std::string body = request_body(cfg_.model_id, full_prompt);
    std::string last_error;
    for (int attempt = 1; attempt <= cfg_.retry.max_attempts; ++attempt) {
        if (attempt > 1) {
            auto delay = std::chrono::milliseconds(cfg_.retry.base_backoff_ms
                                                   << (attempt - 2));
            std::this_thread::sleep_for(delay);
        }
        auto res = client.Post("/v1/completions", headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "endpoint returned status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw BackendError("endpoint returned status " + std::to_string(res->status) + ": " +
                               res->body);
        json j;
        try {
            j = json::parse(res->body);
        } catch (const json::parse_error& e) {
            throw BackendError(std::string("invalid JSON in completions response: ") + e.what());
        }
        if (!j.contains("choices") || j["choices"].empty() ||
            !j["choices"][0].contains("logprobs") || j["choices"][0]["logprobs"].is_null())
            throw BackendError("endpoint returned no logprobs");
        const json& lp = j["choices"][0]["logprobs"];
        EchoResponse r;
        r.tokens = lp.at("tokens").get<std::vector<std::string>>();
        for (const auto& v : lp.at("token_logprobs"))
            r.logprobs.push_back(v.is_null() ? std::nullopt
                                             : std::optional<double>(v.get<double>()));
        r.offsets = lp.at("text_offset").get<std::vector<std::size_t>>();
        return r;
    }
    throw BackendError("request failed after " + std::to_string(cfg_.retry.max_attempts) +
                       " attempts; last error: " + last_error);
}

// --- Cache -----------------------------------------------------------

CachedBackend::CachedBackend(std::shared_ptr<Backend> inner, std::string cache_dir)
    : inner_(std::move(inner)), dir_(std::move(cache_dir)) {
    fs::create_directories(dir_);
}

std::string CachedBackend::cache_key(const std::string& model_id, const std::string& prompt) {
    static const std::string params = R"({"echo":true,"logprobs":1,"max_tokens":0,"temperature":0})";
    std::string material = model_id;
    material += '\0';
    material += prompt;
    material += '\0';
    material += params;
    return sha256_hex(material);
}

std::optional<EchoResponse> CachedBackend::read_entry(const std::string& key,
                                                      const std::string& prompt_sha) const {
    const fs::path path = fs::path(dir_) / (key + ".json");
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        json j = json::parse(buf.str());
        if (j.at("key").get<std::string>() != key ||
            j.at("prompt_sha256").get<std::string>() != prompt_sha)
            throw BackendError("key mismatch");
        EchoResponse r;
        r.tokens = j.at("tokens").get<std::vector<std::string>>();
        for (const auto& v : j.at("token_logprobs"))
            r.logprobs.push_back(v.is_null() ? std::nullopt
                                             : std::optional<double>(v.get<double>()));
        r.offsets = j.at("text_offset").get<std::vector<std::size_t>>();
        if (r.tokens.size() != r.logprobs.size() || r.tokens.size() != r.offsets.size())
            throw BackendError("length mismatch");
        return r;
    } catch (const std::exception& e) {
        std::cerr << "warning: ignoring corrupt cache entry " << path.string() << " ("
                  << e.what() << ")\n";
        return std::nullopt;
    }
}

void CachedBackend::write_entry(const std::string& key, const std::string& prompt_sha,
                                const EchoResponse& resp) const {
    json j;
    j["key"] = key;
    j["model_id"] = inner_->model_id();
    j["prompt_sha256"] = prompt_sha;
    j["tokens"] = resp.tokens;
    json lps = json::array();
    for (const auto& lp : resp.logprobs)
        lps.push_back(lp ? json(*lp) : json(nullptr));
    j["token_logprobs"] = lps;
    j["text_offset"] = resp.offsets;
    j["created_at"] = static_cast<std::int64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());

    // Write-then-rename keeps concurrent writers single-winner.
    const fs::path final_path = fs::path(dir_) / (key + ".json");
    const fs::path tmp_path = fs::path(dir_) / (key + ".tmp." +
                                                std::to_string(fnv1a64(prompt_sha) ^
                                                               std::uint64_t(::getpid())));
    {
        std::ofstream out(tmp_path, std::ios::binary);
        out << j.dump();
    }
    std::error_code ec;
    fs::rename(tmp_path, final_path, ec);
    if (ec) fs::remove(tmp_path, ec);
}

EchoResponse CachedBackend::fetch(const std::string& full_prompt) {
    const std::string prompt_sha = sha256_hex(full_prompt);
    const std::string key = cache_key(inner_->model_id(), full_prompt);
    if (auto cached = read_entry(key, prompt_sha)) {
        std::lock_guard lk(mu_);
        ++stats_.hits;
        return *cached;
    }
    EchoResponse resp = inner_->fetch(full_prompt);
    write_entry(key, prompt_sha, resp);
    std::lock_guard lk(mu_);
    ++stats_.misses;
    return resp;
}

CacheStats CachedBackend::stats() const {
    std::lock_guard lk(mu_);
    return stats_;
}

std::shared_ptr<Backend> make_backend(const BackendConfig& cfg) {
    std::shared_ptr<Backend> inner;
    switch (cfg.kind) {
        case BackendKind::Http: inner = std::make_shared<HttpBackend>(cfg); break;
        case BackendKind::Fixture: inner = std::make_shared<FixtureBackend>(cfg); break;
        case BackendKind::Unigram: inner = std::make_shared<UnigramBackend>(cfg); break;
    }
    if (!cfg.cache_dir.empty())
        return std::make_shared<CachedBackend>(inner, cfg.cache_dir);
    return inner;
}

}  // namespace gptscore
