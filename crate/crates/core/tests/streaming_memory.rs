//! Peak heap use while streaming a dump must not grow with the number of
//! rows.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicUsize, Ordering};

use polyglot_id::corpus::parse_posts_stream;

struct Counting;

static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            let now = LIVE.fetch_add(layout.size(), Ordering::SeqCst) + layout.size();
            PEAK.fetch_max(now, Ordering::SeqCst);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        LIVE.fetch_sub(layout.size(), Ordering::SeqCst);
    }
}

#[global_allocator]
static GLOBAL: Counting = Counting;

fn write_dump(path: &std::path::Path, rows: usize) {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).unwrap());
    writeln!(f, "<posts>").unwrap();
    for i in 0..rows {
        writeln!(
            f,
            "<row Id=\"{i}\" PostTypeId=\"1\" Title=\"question {i}\" Body=\"&lt;p&gt;text&lt;/p&gt;&lt;pre&gt;&lt;code&gt;print({i})&lt;/code&gt;&lt;/pre&gt;\" Tags=\"&lt;python&gt;\" />"
        )
        .unwrap();
    }
    writeln!(f, "</posts>").unwrap();
}

/// Peak bytes above the starting level while counting the rows of a dump.
fn streaming_peak(path: &std::path::Path) -> (usize, usize) {
    let file = std::io::BufReader::new(std::fs::File::open(path).unwrap());
    let base = LIVE.load(Ordering::SeqCst);
    PEAK.store(base, Ordering::SeqCst);
    let mut n = 0;
    for row in parse_posts_stream(file) {
        row.unwrap();
        n += 1;
    }
    (n, PEAK.load(Ordering::SeqCst) - base)
}

#[test]
fn peak_memory_is_flat_in_row_count() {
    let dir = std::env::temp_dir().join(format!("polyglot-id-stream-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let small = dir.join("small.xml");
    let large = dir.join("large.xml");
    write_dump(&small, 1_000);
    write_dump(&large, 10_000);
    let (n_small, peak_small) = streaming_peak(&small);
    let (n_large, peak_large) = streaming_peak(&large);
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!((n_small, n_large), (1_000, 10_000));
    assert!(
        (peak_large as f64) < 1.5 * peak_small as f64 + 4096.0,
        "peak {peak_small} bytes for 1k rows vs {peak_large} for 10k"
    );
}
