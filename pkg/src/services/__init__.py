# Сервисы облачного сервера: аккаунты, блокировка, антифрод, синхронизация
