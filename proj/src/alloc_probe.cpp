#include "meshtally/alloc_probe.hpp"

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <new>

namespace meshtally::alloc_probe {

#ifdef MESHTALLY_COUNT_ALLOCATIONS

namespace {

std::atomic<std::uint64_t> g_allocations{0};
std::atomic<std::uint64_t> g_live{0};
std::atomic<std::uint64_t> g_peak{0};

// Every block carries its size in a header so frees can update the live byte count.
constexpr std::size_t kHeader = alignof(std::max_align_t);

void record_alloc(std::size_t n) {
    g_allocations.fetch_add(1, std::memory_order_relaxed);
    const std::uint64_t live = g_live.fetch_add(n, std::memory_order_relaxed) + n;
    std::uint64_t peak = g_peak.load(std::memory_order_relaxed);
    while (live > peak && !g_peak.compare_exchange_weak(peak, live, std::memory_order_relaxed)) {
    }
}

void* counted_alloc(std::size_t n, std::size_t align) {
    const std::size_t header = align > kHeader ? align : kHeader;
    void* raw = nullptr;
    if (align > kHeader) {
        const std::size_t total = (n + header + align - 1) / align * align;
        raw = std::aligned_alloc(align, total);
    } else {
        raw = std::malloc(n + header);
    }
    if (!raw) return nullptr;
    auto* user = static_cast<unsigned char*>(raw) + header;
    reinterpret_cast<std::size_t*>(user)[-1] = n;
    record_alloc(n);
    return user;
}

void counted_free(void* p, std::size_t align) {
    if (!p) return;
    const std::size_t header = align > kHeader ? align : kHeader;
    auto* user = static_cast<unsigned char*>(p);
    const std::size_t n = reinterpret_cast<std::size_t*>(user)[-1];
    g_live.fetch_sub(n, std::memory_order_relaxed);
    std::free(user - header);
}

void* alloc_or_throw(std::size_t n, std::size_t align) {
    if (n == 0) n = 1;
    for (;;) {
        if (void* p = counted_alloc(n, align)) return p;
        std::new_handler handler = std::get_new_handler();
        if (!handler) throw std::bad_alloc();
        handler();
    }
}

} // namespace

bool supported() { return true; }

Snapshot snapshot() {
    return {g_allocations.load(std::memory_order_relaxed), g_live.load(std::memory_order_relaxed),
            g_peak.load(std::memory_order_relaxed)};
}

void reset_peak() { g_peak.store(g_live.load(std::memory_order_relaxed), std::memory_order_relaxed); }

#else

bool supported() { return false; }
Snapshot snapshot() { return {}; }
void reset_peak() {}

#endif

} // namespace meshtally::alloc_probe

#ifdef MESHTALLY_COUNT_ALLOCATIONS

using meshtally::alloc_probe::alloc_or_throw;
using meshtally::alloc_probe::counted_free;

void* operator new(std::size_t n) { return alloc_or_throw(n, 0); }
void* operator new[](std::size_t n) { return alloc_or_throw(n, 0); }
void* operator new(std::size_t n, std::align_val_t a) { return alloc_or_throw(n, static_cast<std::size_t>(a)); }
void* operator new[](std::size_t n, std::align_val_t a) { return alloc_or_throw(n, static_cast<std::size_t>(a)); }

void* operator new(std::size_t n, const std::nothrow_t&) noexcept {
    try {
        return alloc_or_throw(n, 0);
    } catch (...) {
        return nullptr;
    }
}
void* operator new[](std::size_t n, const std::nothrow_t&) noexcept {
    try {
        return alloc_or_throw(n, 0);
    } catch (...) {
        return nullptr;
    }
}

void operator delete(void* p) noexcept { counted_free(p, 0); }
void operator delete[](void* p) noexcept { counted_free(p, 0); }
void operator delete(void* p, std::size_t) noexcept { counted_free(p, 0); }
void operator delete[](void* p, std::size_t) noexcept { counted_free(p, 0); }
void operator delete(void* p, std::align_val_t a) noexcept { counted_free(p, static_cast<std::size_t>(a)); }
void operator delete[](void* p, std::align_val_t a) noexcept { counted_free(p, static_cast<std::size_t>(a)); }
void operator delete(void* p, std::size_t, std::align_val_t a) noexcept {
    counted_free(p, static_cast<std::size_t>(a));
}
void operator delete[](void* p, std::size_t, std::align_val_t a) noexcept {
    counted_free(p, static_cast<std::size_t>(a));
}
void operator delete(void* p, const std::nothrow_t&) noexcept { counted_free(p, 0); }
void operator delete[](void* p, const std::nothrow_t&) noexcept { counted_free(p, 0); }

#endif
