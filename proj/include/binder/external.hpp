#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <optional>
#include <string>

#include "json.hpp"

namespace binder::ext {

// Newline-delimited JSON request/response over a child-process pipe with a
// hard timeout. Any failure (spawn, timeout, malformed reply, EOF) disables
// the hook; callers fall back to the built-in rule policies.
class ProcessHook {
public:
    ProcessHook() = default;

    ProcessHook(const std::string& command, int timeout_ms)
        : timeout_ms_(timeout_ms) {
        if (command.empty()) return;
        int to_child[2], from_child[2];
        if (pipe(to_child) != 0) return;
        if (pipe(from_child) != 0) {
            close(to_child[0]);
            close(to_child[1]);
            return;
        }
        pid_ = fork();
        if (pid_ < 0) {
            close(to_child[0]);
            close(to_child[1]);
            close(from_child[0]);
            close(from_child[1]);
            pid_ = -1;
            return;
        }
        if (pid_ == 0) {
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            close(to_child[0]);
            close(to_child[1]);
            close(from_child[0]);
            close(from_child[1]);
            execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        in_fd_ = to_child[1];
        out_fd_ = from_child[0];
        alive_ = true;
    }

    ProcessHook(const ProcessHook&) = delete;
    ProcessHook& operator=(const ProcessHook&) = delete;

    ProcessHook(ProcessHook&& o) noexcept { *this = std::move(o); }
    ProcessHook& operator=(ProcessHook&& o) noexcept {
        if (this != &o) {
            shutdown();
            pid_ = o.pid_;
            in_fd_ = o.in_fd_;
            out_fd_ = o.out_fd_;
            alive_ = o.alive_;
            timeout_ms_ = o.timeout_ms_;
            buffer_ = std::move(o.buffer_);
            o.pid_ = -1;
            o.in_fd_ = o.out_fd_ = -1;
            o.alive_ = false;
        }
        return *this;
    }

    ~ProcessHook() { shutdown(); }

    bool alive() const { return alive_; }

    std::optional<nlohmann::json> exchange(const nlohmann::json& request) {
        if (!alive_) return std::nullopt;
        std::string line = request.dump() + "\n";
        size_t off = 0;
        while (off < line.size()) {
            ssize_t n = write(in_fd_, line.data() + off, line.size() - off);
            if (n <= 0) {
                disable();
                return std::nullopt;
            }
            off += static_cast<size_t>(n);
        }
        while (true) {
            auto nl = buffer_.find('\n');
            if (nl != std::string::npos) {
                std::string reply = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                auto parsed = nlohmann::json::parse(reply, nullptr, false);
                if (parsed.is_discarded()) {
                    disable();
                    return std::nullopt;
                }
                return parsed;
            }
            struct pollfd pfd{out_fd_, POLLIN, 0};
            int pr = poll(&pfd, 1, timeout_ms_);
            if (pr <= 0) {  // timeout or error
                disable();
                return std::nullopt;
            }
            char chunk[4096];
            ssize_t n = read(out_fd_, chunk, sizeof(chunk));
            if (n <= 0) {
                disable();
                return std::nullopt;
            }
            buffer_.append(chunk, static_cast<size_t>(n));
        }
    }

private:
    void disable() { alive_ = false; }

    void shutdown() {
        if (in_fd_ >= 0) close(in_fd_);
        if (out_fd_ >= 0) close(out_fd_);
        in_fd_ = out_fd_ = -1;
        if (pid_ > 0) {
            kill(pid_, SIGKILL);
            int status = 0;
            waitpid(pid_, &status, 0);
            pid_ = -1;
        }
        alive_ = false;
    }

    pid_t pid_ = -1;
    int in_fd_ = -1;
    int out_fd_ = -1;
    bool alive_ = false;
    int timeout_ms_ = 500;
    std::string buffer_;
};

}  // namespace binder::ext
