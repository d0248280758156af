use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io::BufReader;
use std::net::{Shutdown, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::protocol::{read_message, write_message, Message, ProtocolError, PROTOCOL_VERSION};
use super::sequential::{RunOptions, RunReport};
use super::DistError;
use crate::mcts::{Engine, JobRequest, MctsError, Resolution};

const ACCEPT_POLL: Duration = Duration::from_millis(5);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MasterConfig {
    pub run: RunOptions,
    /// Workers the deployment expects; sizes the default queue bound.
    pub workers: usize,
    /// Maximum outstanding jobs; `None` means twice the worker count. A bound
    /// of 1 with one worker reproduces the sequential search exactly.
    pub queue_bound: Option<usize>,
    /// Give up when no worker message arrives for this long while jobs are
    /// outstanding.
    pub idle_timeout: Option<Duration>,
}

impl MasterConfig {
    pub fn new(run: RunOptions, workers: usize) -> Self {
        Self {
            run,
            workers,
            queue_bound: None,
            idle_timeout: None,
        }
    }

    pub fn bound(&self) -> usize {
        self.queue_bound.unwrap_or(2 * self.workers.max(1)).max(1)
    }
}

enum Event {
    Connected(u64, TcpStream),
    Message(u64, Message),
    Broken(u64, ProtocolError),
    Closed(u64),
}

struct Conn {
    writer: TcpStream,
    worker_id: Option<String>,
    job: Option<u64>,
}

fn spawn_acceptor(listener: TcpListener, tx: Sender<Event>, stop: Arc<AtomicBool>) -> std::io::Result<()> {
    listener.set_nonblocking(true)?;
    thread::spawn(move || {
        let mut next_id = 0u64;
        while !stop.load(Ordering::Relaxed) {
            match listener.accept() {
                Ok((stream, peer)) => {
                    next_id += 1;
                    let id = next_id;
                    info!("connection {id} from {peer}");
                    let _ = stream.set_nonblocking(false);
                    let _ = stream.set_nodelay(true);
                    let Ok(reader) = stream.try_clone() else { continue };
                    if tx.send(Event::Connected(id, stream)).is_err() {
                        return;
                    }
                    let tx = tx.clone();
                    thread::spawn(move || read_loop(id, reader, tx));
                }
                Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => thread::sleep(ACCEPT_POLL),
                Err(e) => warn!("accept failed: {e}"),
            }
        }
    });
    Ok(())
}

fn read_loop(id: u64, stream: TcpStream, tx: Sender<Event>) {
    let mut reader = BufReader::new(stream);
    loop {
        let event = match read_message(&mut reader) {
            Ok(Some(msg)) => Event::Message(id, msg),
            Ok(None) => Event::Closed(id),
            Err(e) => Event::Broken(id, e),
        };
        let last = !matches!(event, Event::Message(..));
        if tx.send(event).is_err() || last {
            return;
        }
    }
}

struct Master<'a> {
    engine: Engine,
    cfg: &'a MasterConfig,
    conns: BTreeMap<u64, Conn>,
    idle: VecDeque<u64>,
    queue: VecDeque<JobRequest>,
    assigned: HashMap<u64, JobRequest>,
}

impl Master<'_> {
    fn outstanding(&self) -> usize {
        self.engine.pending_count()
    }

    fn target_reached(&self) -> bool {
        self.cfg.run.target_reached(&self.engine)
    }

    fn may_iterate(&self) -> bool {
        !self.target_reached()
            && self.engine.unique_evaluations() + self.outstanding() < self.cfg.run.budget
            && self.engine.iterations() < self.cfg.run.iteration_cap()
            && self.outstanding() < self.cfg.bound()
    }

    fn finished(&self) -> bool {
        self.target_reached() || (self.outstanding() == 0 && !self.may_iterate())
    }

    fn generate(&mut self) -> Result<(), DistError> {
        while self.may_iterate() {
            if let Resolution::Dispatched(job) = self.engine.iterate()?.resolution {
                self.queue.push_back(job);
            }
            self.cfg.run.maybe_snapshot(&self.engine)?;
        }
        Ok(())
    }

    fn assign(&mut self) {
        while !self.queue.is_empty() {
            let Some(id) = self.idle.pop_front() else { return };
            let job = self.queue.pop_front().expect("queue is not empty");
            let msg = Message::JobAssign {
                job_id: job.job_id,
                encoding: job.encoding.clone(),
                parent_encoding: job.parent_encoding.clone(),
            };
            let conn = self.conns.get_mut(&id).expect("idle workers are connected");
            match write_message(&mut conn.writer, &msg) {
                Ok(()) => {
                    conn.job = Some(job.job_id);
                    self.assigned.insert(job.job_id, job);
                }
                Err(e) => {
                    warn!("worker {id}: send failed: {e}");
                    self.queue.push_front(job);
                    self.drop_conn(id);
                }
            }
        }
    }

    /// Forgets a connection and puts its in-flight job back at the head of
    /// the queue.
    fn drop_conn(&mut self, id: u64) {
        self.idle.retain(|&i| i != id);
        if let Some(conn) = self.conns.remove(&id) {
            let _ = conn.writer.shutdown(Shutdown::Both);
            if let Some(job) = conn.job.and_then(|j| self.assigned.remove(&j)) {
                info!("re-queueing job {} from worker {id}", job.job_id);
                self.queue.push_front(job);
            }
        }
    }

    fn protocol_violation(&mut self, id: u64, err: &ProtocolError) {
        warn!("worker {id}: protocol error: {err}");
        self.drop_conn(id);
    }

    fn handle(&mut self, event: Event) -> Result<(), DistError> {
        match event {
            Event::Connected(id, writer) => {
                self.conns.insert(
                    id,
                    Conn {
                        writer,
                        worker_id: None,
                        job: None,
                    },
                );
            }
            Event::Closed(id) => {
                info!("worker {id} disconnected");
                self.drop_conn(id);
            }
            Event::Broken(id, e) => self.protocol_violation(id, &e),
            Event::Message(id, msg) => self.handle_message(id, msg)?,
        }
        Ok(())
    }

    fn handle_message(&mut self, id: u64, msg: Message) -> Result<(), DistError> {
        let Some(conn) = self.conns.get_mut(&id) else {
            return Ok(());
        };
        match msg {
            Message::Hello {
                worker_id,
                protocol_version,
            } => {
                if conn.worker_id.is_some() {
                    self.protocol_violation(id, &ProtocolError::Unexpected("repeated hello".into()));
                } else if protocol_version != PROTOCOL_VERSION {
                    let _ = write_message(
                        &mut conn.writer,
                        &Message::Shutdown {
                            reason: format!("protocol version {protocol_version} not supported"),
                        },
                    );
                    self.protocol_violation(id, &ProtocolError::Version { found: protocol_version });
                } else {
                    info!("worker {id} is {worker_id:?}");
                    conn.worker_id = Some(worker_id);
                    self.idle.push_back(id);
                }
            }
            Message::JobResult { job_id, accuracy } => {
                if conn.job != Some(job_id) {
                    let err = ProtocolError::Unexpected(format!("result for job {job_id} not assigned here"));
                    self.protocol_violation(id, &err);
                    return Ok(());
                }
                if !(0.0..=1.0).contains(&accuracy) {
                    let err = ProtocolError::Unexpected(format!("accuracy {accuracy} outside [0, 1]"));
                    self.protocol_violation(id, &err);
                    return Ok(());
                }
                conn.job = None;
                self.idle.push_back(id);
                self.assigned.remove(&job_id);
                match self.engine.apply_result(job_id, accuracy) {
                    Ok(_) => {}
                    Err(MctsError::UnknownOutcome(j)) => warn!("ignoring duplicate result for job {j}"),
                    Err(e) => return Err(e.into()),
                }
            }
            Message::JobError { job_id, reason } => {
                return Err(DistError::WorkerFailed { job_id, reason });
            }
            other @ (Message::JobAssign { .. } | Message::Shutdown { .. }) => {
                let err = ProtocolError::Unexpected(format!("{other:?} sent by a worker"));
                self.protocol_violation(id, &err);
            }
        }
        Ok(())
    }

    fn shutdown_all(&mut self, reason: &str) {
        for conn in self.conns.values_mut() {
            let _ = write_message(
                &mut conn.writer,
                &Message::Shutdown {
                    reason: reason.to_string(),
                },
            );
        }
    }

    fn run(&mut self, rx: &Receiver<Event>) -> Result<(), DistError> {
        let mut last_activity = Instant::now();
        loop {
            self.generate()?;
            if self.finished() {
                return Ok(());
            }
            self.assign();
            let event = match self.cfg.idle_timeout {
                Some(limit) => {
                    let wait = limit.saturating_sub(last_activity.elapsed());
                    match rx.recv_timeout(wait) {
                        Ok(ev) => ev,
                        Err(RecvTimeoutError::Timeout) => return Err(DistError::NoWorkers(limit)),
                        Err(RecvTimeoutError::Disconnected) => return Err(DistError::NoWorkers(limit)),
                    }
                }
                None => rx.recv().map_err(|_| DistError::Config("listener stopped".into()))?,
            };
            last_activity = Instant::now();
            self.handle(event)?;
        }
    }
}

/// Serves jobs to workers connecting on `listener` until the budget or the
/// target is reached. All tree mutations happen on the calling thread; the
/// connection threads only forward parsed messages to it.
///
/// Jobs still pending in a restored engine are queued first, so a resumed
/// run re-issues work that was in flight when the snapshot was taken.
pub fn master_loop(engine: Engine, cfg: &MasterConfig, listener: TcpListener) -> Result<(Engine, RunReport), DistError> {
    let (tx, rx) = mpsc::channel();
    let stop = Arc::new(AtomicBool::new(false));
    spawn_acceptor(listener, tx, stop.clone())?;
    let queue = engine
        .pending()
        .map(|p| JobRequest {
            job_id: p.job_id,
            encoding: p.encoding.clone(),
            arch: p.arch.clone(),
            parent_encoding: p.parent_encoding.clone(),
        })
        .collect();
    let mut master = Master {
        engine,
        cfg,
        conns: BTreeMap::new(),
        idle: VecDeque::new(),
        queue,
        assigned: HashMap::new(),
    };
    let result = master.run(&rx);
    let reason = match &result {
        Ok(()) => "search finished".to_string(),
        Err(e) => format!("search aborted: {e}"),
    };
    master.shutdown_all(&reason);
    stop.store(true, Ordering::Relaxed);
    result?;
    let report = RunReport::from_engine(&master.engine, cfg.run.target);
    Ok((master.engine, report))
}
