import json
import logging
import os
from datetime import datetime, timezone
from functools import lru_cache

from sqlalchemy import Column, DateTime, Integer, String, Text, create_engine
from sqlalchemy.exc import SQLAlchemyError
from sqlalchemy.orm import declarative_base, sessionmaker

logger = logging.getLogger(__name__)

DEFAULT_DATABASE_URL = 'sqlite:///solext_runs.db'

Base = declarative_base()


class RunRecord(Base):
    """One recorded CLI run."""
    __tablename__ = 'run_records'

    id = Column(Integer, primary_key=True)
    command = Column(String(32), nullable=False, index=True)
    model = Column(String(64))
    dimension = Column(Integer)
    config = Column(Text)  # JSON string
    report = Column(Text)  # JSON string
    status = Column(String(16))
    created_at = Column(DateTime, default=lambda: datetime.now(timezone.utc))

    def to_dict(self):
        return {
            'id': self.id,
            'command': self.command,
            'model': self.model,
            'dimension': self.dimension,
            'config': json.loads(self.config) if isinstance(self.config, str) else {},
            'report': json.loads(self.report) if isinstance(self.report, str) else {},
            'status': self.status,
            'created_at': self.created_at.isoformat() if self.created_at else None,
        }


def database_url():
    return os.environ.get('DATABASE_URL') or DEFAULT_DATABASE_URL


@lru_cache(maxsize=None)
def _session_factory(url):
    engine = create_engine(url)
    Base.metadata.create_all(engine)
    return sessionmaker(bind=engine)


def save_run(command, config, report, status, url=None):
    """
    Store a run.

    Args:
        command (str): Subcommand name
        config (dict): Configuration used
        report (dict): Report written by the command
        status (str): Overall status

    Returns:
        bool: True if successful, False otherwise
    """
    try:
        session = _session_factory(url or database_url())()
        try:
            session.add(RunRecord(
                command=command,
                model=config.get('model'),
                dimension=config.get('dimension'),
                config=json.dumps(config, sort_keys=True),
                report=json.dumps(report, sort_keys=True, default=float),
                status=status,
            ))
            session.commit()
        finally:
            session.close()
        return True
    except SQLAlchemyError as exc:
        logger.error('error saving run: %s', exc)
        return False


def get_run_history(command=None, limit=20, url=None):
    """
    Recorded runs, newest first.

    Args:
        command (str, optional): Restrict to one subcommand
        limit (int): Maximum number of records

    Returns:
        list: Records as dictionaries
    """
    try:
        session = _session_factory(url or database_url())()
        try:
            query = session.query(RunRecord)
            if command:
                query = query.filter_by(command=command)
            records = query.order_by(RunRecord.created_at.desc(), RunRecord.id.desc()).limit(limit).all()
            return [record.to_dict() for record in records]
        finally:
            session.close()
    except SQLAlchemyError as exc:
        logger.error('error reading run history: %s', exc)
        return []
