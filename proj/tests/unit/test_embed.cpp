#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "gen.hpp"
#include "kgfuse/embed.hpp"
#include "kgfuse/errors.hpp"
#include "kgfuse/remote_embed.hpp"

using namespace kgfuse;
using namespace kgfuse::embed;

namespace {

EmbeddingVector vec(std::vector<double> v) { return EmbeddingVector(std::move(v)); }

EmbeddingVector random_vec(kgtest::Gen& gen, std::size_t dim) {
    std::vector<double> v(dim);
    do {
        for (auto& x : v) x = gen.real(-5, 5);
    } while (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; }));
    return vec(v);
}

}  // namespace

TEST(Cosine, Examples) {
    EXPECT_EQ(cosine_sim(vec({1, 0}), vec({0, 1})), 0.0);
    EXPECT_NEAR(cosine_sim(vec({2, 0}), vec({1, 0})), 1.0, 1e-12);
    EXPECT_NEAR(cosine_sim(vec({1, 1}), vec({1, 0})), 0.7071067812, 1e-9);
}

TEST(Cosine, Errors) {
    EXPECT_THROW(cosine_sim(vec({1, 0}), vec({1, 0, 0})), DimensionError);
    EXPECT_THROW(cosine_sim(vec({0, 0}), vec({1, 0})), DimensionError);
    EXPECT_THROW(vec({}), Error);
    EXPECT_THROW(vec({std::numeric_limits<double>::quiet_NaN()}), Error);
}

TEST(CosineProperty, SelfSymmetryScale) {
    kgtest::Gen gen(42);
    for (int i = 0; i < 1000; ++i) {
        const auto dim = static_cast<std::size_t>(gen.integer(1, 32));
        const auto a = random_vec(gen, dim);
        const auto b = random_vec(gen, dim);
        ASSERT_NEAR(cosine_sim(a, a), 1.0, 1e-12);
        ASSERT_EQ(cosine_sim(a, b), cosine_sim(b, a));
        for (double k : {0.5, 3.0, 1000.0}) {
            std::vector<double> ka(a.values().begin(), a.values().end());
            for (auto& x : ka) x *= k;
            ASSERT_NEAR(cosine_sim(vec(ka), b), cosine_sim(a, b), 1e-9);
        }
        const double c = cosine_sim(a, b);
        ASSERT_GE(c, -1.0);
        ASSERT_LE(c, 1.0);
    }
}

TEST(DeterministicProvider, Deterministic) {
    const DeterministicProvider p(7);
    EXPECT_EQ(p.embed("synaptic plasticity"), p.embed("synaptic plasticity"));
    EXPECT_EQ(p.dim(), 64u);
    EXPECT_EQ(DeterministicProvider(7).embed("x y z"), p.embed("x y z"));
}

TEST(DeterministicProvider, AliasTableGivesIdenticalVectors) {
    const DeterministicProvider p(0, 64, {{"AD", "alzheimer's disease"}});
    EXPECT_EQ(p.embed("AD"), p.embed("alzheimer's disease"));
    EXPECT_EQ(p.embed("ad"), p.embed("Alzheimer's Disease"));
    EXPECT_NE(DeterministicProvider(0).embed("AD"), p.embed("alzheimer's disease"));
}

TEST(DeterministicProvider, EmptyTextRejected) {
    const DeterministicProvider p;
    EXPECT_THROW(p.embed(""), Error);
    EXPECT_THROW(p.embed(" ,;- "), Error);
}

TEST(DeterministicProviderProperty, UnitNormAndSeedSensitivity) {
    kgtest::Gen gen(9);
    const DeterministicProvider a(1, 48), b(2, 48), a2(1, 48);
    for (int i = 0; i < 300; ++i) {
        const auto text = gen.word(static_cast<std::size_t>(gen.integer(1, 12))) + " " + gen.word(3);
        const auto va = a.embed(text);
        ASSERT_EQ(va.dim(), 48u);
        ASSERT_NEAR(va.norm(), 1.0, 1e-9);
        ASSERT_NE(va, b.embed(text));
        const auto again = a2.embed(text);
        ASSERT_EQ(std::memcmp(va.values().data(), again.values().data(), 48 * sizeof(double)), 0);
    }
}

TEST(Fnv, KnownVectors) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

namespace {

// Local embedding endpoint whose answer is chosen per test.
class MockEndpoint {
public:
    using Handler = std::function<void(const std::vector<std::string>&, httplib::Response&)>;

    explicit MockEndpoint(Handler h) : handler_(std::move(h)) {
        server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
            ++requests_;
            const auto texts = nlohmann::json::parse(req.body).at("texts").get<std::vector<std::string>>();
            {
                std::lock_guard lock(mu_);
                batch_sizes_.push_back(texts.size());
                last_auth_ = req.get_header_value("X-Api-Key");
            }
            handler_(texts, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockEndpoint() {
        server_.stop();
        thread_.join();
    }

    RemoteConfig config() const {
        RemoteConfig c;
        c.endpoint = "http://127.0.0.1:" + std::to_string(port_) + "/embed";
        c.initial_backoff = std::chrono::milliseconds(1);
        c.timeout = std::chrono::milliseconds(5000);
        return c;
    }
    int requests() const { return requests_; }
    std::vector<std::size_t> batch_sizes() const {
        std::lock_guard lock(mu_);
        return batch_sizes_;
    }
    std::string last_auth() const {
        std::lock_guard lock(mu_);
        return last_auth_;
    }

private:
    Handler handler_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> requests_{0};
    mutable std::mutex mu_;
    std::vector<std::size_t> batch_sizes_;
    std::string last_auth_;
};

// Vector i of a batch encodes the text length so ordering is checkable.
void echo4(const std::vector<std::string>& texts, httplib::Response& res) {
    nlohmann::json vs = nlohmann::json::array();
    for (const auto& t : texts) vs.push_back({double(t.size()), 1.0, 2.0, 3.0});
    res.set_content(nlohmann::json{{"vectors", vs}}.dump(), "application/json");
}

}  // namespace

TEST(RemoteEmbed, EmptyInputSendsNothing) {
    MockEndpoint m(echo4);
    EXPECT_TRUE(remote_embed(m.config(), {}).empty());
    EXPECT_EQ(m.requests(), 0);
}

TEST(RemoteEmbed, OrderPreserved) {
    MockEndpoint m(echo4);
    auto cfg = m.config();
    cfg.auth_header_name = "X-Api-Key";
    cfg.auth_header_value = "secret";
    const auto out = remote_embed(cfg, {"a", "bbb", "cc"});
    ASSERT_EQ(out.size(), 3u);
    for (const auto& v : out) EXPECT_EQ(v.dim(), 4u);
    EXPECT_EQ(out[0][0], 1.0);
    EXPECT_EQ(out[1][0], 3.0);
    EXPECT_EQ(out[2][0], 2.0);
    EXPECT_EQ(m.last_auth(), "secret");
}

TEST(RemoteEmbed, BatchesOfAtMost64) {
    MockEndpoint m(echo4);
    std::vector<std::string> texts;
    for (int i = 0; i < 150; ++i) texts.push_back(std::string(static_cast<std::size_t>(i % 7 + 1), 'x'));
    const auto out = remote_embed(m.config(), texts);
    ASSERT_EQ(out.size(), 150u);
    for (std::size_t i = 0; i < texts.size(); ++i) ASSERT_EQ(out[i][0], double(texts[i].size()));
    auto sizes = m.batch_sizes();
    std::sort(sizes.begin(), sizes.end());
    EXPECT_EQ(sizes, (std::vector<std::size_t>{22, 64, 64}));
}

TEST(RemoteEmbed, MixedDimensions) {
    MockEndpoint m([](const std::vector<std::string>&, httplib::Response& res) {
        res.set_content(R"({"vectors":[[1,2,3,4],[1,2,3]]})", "application/json");
    });
    EXPECT_THROW(remote_embed(m.config(), {"a", "b"}), DimensionError);
}

TEST(RemoteEmbed, MalformedResponse) {
    MockEndpoint m([](const std::vector<std::string>&, httplib::Response& res) {
        res.set_content(R"({"nope":1})", "application/json");
    });
    EXPECT_THROW(remote_embed(m.config(), {"a"}), ProtocolError);
}

TEST(RemoteEmbed, RetriesServerErrors) {
    std::atomic<int> calls{0};
    MockEndpoint m([&](const std::vector<std::string>& t, httplib::Response& res) {
        if (++calls < 3) {
            res.status = 503;
            return;
        }
        echo4(t, res);
    });
    EXPECT_EQ(remote_embed(m.config(), {"abc"}).size(), 1u);
    EXPECT_EQ(m.requests(), 3);
}

TEST(RemoteEmbed, GivesUpAfterThreeAttempts) {
    MockEndpoint m([](const std::vector<std::string>&, httplib::Response& res) { res.status = 500; });
    EXPECT_THROW(remote_embed(m.config(), {"abc"}), ProtocolError);
    EXPECT_EQ(m.requests(), 3);
}

TEST(RemoteEmbed, UnreachableEndpoint) {
    RemoteConfig c;
    {
        MockEndpoint m(echo4);
        c = m.config();
    }
    c.timeout = std::chrono::milliseconds(1000);
    EXPECT_THROW(remote_embed(c, {"a"}), NetworkError);
}

TEST(RemoteEmbed, BadEndpoint) {
    RemoteConfig c;
    c.endpoint = "ftp://x/embed";
    EXPECT_THROW(RemoteEmbeddingClient{c}, ConfigError);
}

TEST(RemoteProvider, DimensionChecked) {
    MockEndpoint m(echo4);
    EXPECT_EQ(RemoteProvider(m.config(), 4).embed("abc").dim(), 4u);
    EXPECT_THROW(RemoteProvider(m.config(), 8).embed("abc"), DimensionError);
}
